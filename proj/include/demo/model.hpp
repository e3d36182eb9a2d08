#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "demo/bilinear.hpp"
#include "demo/graph.hpp"

namespace demo {

enum class Backbone { vgg_tiny, resnet_tiny };
enum class Head { global, bilinear };

// Declarative description of a regression model: a small train-from-scratch
// backbone (plain conv stack or residual stack), a pooling head (first-order
// global average or second-order bilinear) and a final linear regression to
// the emotion-space dimensions.
struct ModelConfig {
    Backbone backbone = Backbone::vgg_tiny;
    std::vector<int> stage_widths = {16, 32, 64, 64};  // vgg: 4 stages; resnet: stem + 3 blocks
    Head head = Head::global;
    BilinearHeadConfig bilinear;
    int output_dims = 2;       // 2 = VA, 3 = VAD
    int input_size = 48;       // 48 native or 224 replicated-RGB mode
    int input_channels = 1;
    std::uint64_t seed = 0;

    void validate() const;
    int feature_channels() const { return stage_widths.back(); }
};

std::string backbone_name(Backbone b);
std::string head_name(Head h);
Backbone backbone_from_name(const std::string& s);
Head head_from_name(const std::string& s);

struct Param {
    std::string name;
    Tensor tensor;
};

class Model {
public:
    static Model build(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Param>& params() { return params_; }
    const std::vector<Param>& params() const { return params_; }
    std::int64_t param_count() const;

    // Conv activations that feature_map_export may tap, in forward order.
    const std::vector<std::string>& conv_layer_names() const { return conv_layers_; }

    struct Bound {
        std::vector<Var> vars;  // one per parameter, in declaration order
    };

    // Inserts every parameter as a graph leaf (requires_grad = train_params).
    Bound bind(GraphT<float>& g, bool train_params) const;

    // Builds the forward computation on g and returns the [N, output_dims]
    // prediction node. When `taps` is given, named conv activations are
    // copied into it.
    Var forward(GraphT<float>& g, const Bound& bound, Var input, bool training, Rng& rng,
                std::map<std::string, Tensor>* taps = nullptr) const;

    // Inference convenience: fresh graph, no gradients, dropout off.
    Tensor predict(const Tensor& batch) const;

private:
    Model() = default;

    Var param_var(const Bound& bound, const std::string& name) const;

    ModelConfig cfg_;
    std::vector<Param> params_;
    std::map<std::string, std::size_t> index_;
    std::vector<std::string> conv_layers_;
};

}  // namespace demo
