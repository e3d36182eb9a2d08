#include "demo/model.hpp"

#include <cmath>

#include "demo/rng.hpp"

namespace demo {

void ModelConfig::validate() const {
    if (output_dims != 2 && output_dims != 3)
        throw ConfigError("model: output_dims must be 2 (VA) or 3 (VAD)");
    if (input_size != 48 && input_size != 224)
        throw ConfigError("model: input_size must be 48 or 224");
    if (input_channels != 1 && input_channels != 3)
        throw ConfigError("model: input_channels must be 1 or 3");
    if (stage_widths.size() != 4) throw ConfigError("model: stage_widths must list 4 stages");
    for (int w : stage_widths)
        if (w < 1) throw ConfigError("model: stage widths must be positive");
    if (head == Head::bilinear) {
        bilinear.validate();
        if (bilinear.reduce_channels > feature_channels())
            throw ConfigError("model: bilinear reduce_channels " +
                              std::to_string(bilinear.reduce_channels) +
                              " exceeds backbone output channels " +
                              std::to_string(feature_channels()));
    }
}

std::string backbone_name(Backbone b) {
    return b == Backbone::vgg_tiny ? "vgg_tiny" : "resnet_tiny";
}

std::string head_name(Head h) { return h == Head::global ? "global" : "bilinear"; }

Backbone backbone_from_name(const std::string& s) {
    if (s == "vgg_tiny") return Backbone::vgg_tiny;
    if (s == "resnet_tiny") return Backbone::resnet_tiny;
    throw ConfigError("unknown backbone '" + s + "' (expected vgg_tiny or resnet_tiny)");
}

Head head_from_name(const std::string& s) {
    if (s == "global") return Head::global;
    if (s == "bilinear") return Head::bilinear;
    throw ConfigError("unknown head '" + s + "' (expected global or bilinear)");
}

namespace {

Tensor he_conv(Shape shape, Rng& rng) {
    Tensor t(shape);
    const double fan_in = static_cast<double>(shape[1]) * shape[2] * shape[3];
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : t.data) v = static_cast<float>(rng.normal() * std);
    return t;
}

Tensor uniform_linear(Shape shape, Rng& rng) {
    Tensor t(shape);
    const double bound = 1.0 / std::sqrt(static_cast<double>(shape[1]));
    for (auto& v : t.data) v = static_cast<float>(rng.uniform(-bound, bound));
    return t;
}

// Block i uses stride 1 for the first block and 2 after; the skip is an
// identity only when shape is preserved, otherwise a 1x1 projection.
int resnet_block_stride(int block) { return block == 1 ? 1 : 2; }

bool resnet_needs_proj(int in_c, int out_c, int stride) { return in_c != out_c || stride != 1; }

}  // namespace

Model Model::build(const ModelConfig& cfg) {
    cfg.validate();
    Model m;
    m.cfg_ = cfg;
    Rng rng(cfg.seed);

    auto add_conv = [&](const std::string& name, int out_c, int in_c, int k) {
        m.params_.push_back({name + ".weight", he_conv(Shape{out_c, in_c, k, k}, rng)});
        m.params_.push_back({name + ".bias", Tensor::zeros(Shape{out_c})});
    };
    auto add_linear = [&](const std::string& name, int out_d, int in_d, float bias_init = 0.0f) {
        m.params_.push_back({name + ".weight", uniform_linear(Shape{out_d, in_d}, rng)});
        m.params_.push_back({name + ".bias", Tensor::full(Shape{out_d}, bias_init)});
    };
    // The regression output lives on the 1-9 rating scale; starting its bias
    // at the scale midpoint removes the large initial offset from training.
    constexpr float kScaleMidpoint = 5.0f;

    const auto& w = cfg.stage_widths;
    if (cfg.backbone == Backbone::vgg_tiny) {
        int in_c = cfg.input_channels;
        for (int i = 0; i < 4; ++i) {
            const std::string name = "conv" + std::to_string(i + 1);
            add_conv(name, w[i], in_c, 3);
            m.conv_layers_.push_back(name);
            in_c = w[i];
        }
    } else {
        add_conv("stem", w[0], cfg.input_channels, 3);
        m.conv_layers_.push_back("stem");
        int in_c = w[0];
        for (int b = 1; b <= 3; ++b) {
            const std::string name = "block" + std::to_string(b);
            const int out_c = w[b];
            const int stride = resnet_block_stride(b);
            add_conv(name + ".conv1", out_c, in_c, 3);
            m.conv_layers_.push_back(name + ".conv1");
            const bool truncated = cfg.head == Head::bilinear && b == 3;
            if (!truncated) {
                // The bilinear head removes everything past the final
                // block's first conv, so those parameters only exist for
                // the global head.
                add_conv(name + ".conv2", out_c, out_c, 3);
                m.conv_layers_.push_back(name + ".conv2");
                if (resnet_needs_proj(in_c, out_c, stride)) {
                    m.params_.push_back(
                        {name + ".proj.weight", he_conv(Shape{out_c, in_c, 1, 1}, rng)});
                    m.params_.push_back({name + ".proj.bias", Tensor::zeros(Shape{out_c})});
                }
                m.conv_layers_.push_back(name + ".out");
            }
            in_c = out_c;
        }
    }

    if (cfg.head == Head::bilinear) {
        m.params_.push_back({"head.reduce.weight",
                             he_conv(Shape{cfg.bilinear.reduce_channels, w[3], 1, 1}, rng)});
        m.params_.push_back({"head.reduce.bias", Tensor::zeros(Shape{cfg.bilinear.reduce_channels})});
        m.conv_layers_.push_back("head.reduce");
        add_linear("head.fc", cfg.bilinear.post_fc_dim, cfg.bilinear.bilinear_len());
        add_linear("out", cfg.output_dims, cfg.bilinear.post_fc_dim, kScaleMidpoint);
    } else {
        add_linear("out", cfg.output_dims, w[3], kScaleMidpoint);
    }

    for (std::size_t i = 0; i < m.params_.size(); ++i) m.index_[m.params_[i].name] = i;
    return m;
}

std::int64_t Model::param_count() const {
    std::int64_t n = 0;
    for (const auto& p : params_) n += p.tensor.numel();
    return n;
}

Model::Bound Model::bind(GraphT<float>& g, bool train_params) const {
    Bound b;
    b.vars.reserve(params_.size());
    for (const auto& p : params_) {
        Tensor t = p.tensor;
        t.requires_grad = train_params;
        t.grad.clear();
        b.vars.push_back(g.leaf(std::move(t)));
    }
    return b;
}

Var Model::param_var(const Bound& bound, const std::string& name) const {
    const auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("model: no parameter named '" + name + "'");
    return bound.vars[it->second];
}

Var Model::forward(GraphT<float>& g, const Bound& bound, Var input, bool training, Rng& rng,
                   std::map<std::string, Tensor>* taps) const {
    const auto& in_shape = g.value(input).shape;
    if (in_shape.size() != 4 || in_shape[1] != cfg_.input_channels ||
        in_shape[2] != cfg_.input_size || in_shape[3] != cfg_.input_size)
        throw ShapeError("model: input must be [N," + std::to_string(cfg_.input_channels) + "," +
                         std::to_string(cfg_.input_size) + "," + std::to_string(cfg_.input_size) +
                         "], got " + shape_str(in_shape));

    auto p = [&](const std::string& name) { return param_var(bound, name); };
    auto tap = [&](const std::string& name, Var v) {
        if (taps) (*taps)[name] = g.value(v);
    };

    Var feat = input;
    if (cfg_.backbone == Backbone::vgg_tiny) {
        Var h = input;
        for (int i = 0; i < 4; ++i) {
            const std::string name = "conv" + std::to_string(i + 1);
            h = relu(g, conv2d(g, h, p(name + ".weight"), p(name + ".bias"), 2, 1));
            tap(name, h);
        }
        feat = h;
    } else {
        Var h = relu(g, conv2d(g, input, p("stem.weight"), p("stem.bias"), 1, 1));
        tap("stem", h);
        const auto& w = cfg_.stage_widths;
        int in_c = w[0];
        for (int b = 1; b <= 3; ++b) {
            const std::string name = "block" + std::to_string(b);
            const int out_c = w[b];
            const int stride = resnet_block_stride(b);
            Var branch = relu(g, conv2d(g, h, p(name + ".conv1.weight"), p(name + ".conv1.bias"),
                                        stride, 1));
            tap(name + ".conv1", branch);
            if (cfg_.head == Head::bilinear && b == 3) {
                feat = branch;  // attach point: layers past the last block's first conv removed
                break;
            }
            Var branch2 =
                conv2d(g, branch, p(name + ".conv2.weight"), p(name + ".conv2.bias"), 1, 1);
            tap(name + ".conv2", branch2);
            Var skip = resnet_needs_proj(in_c, out_c, stride)
                           ? conv2d(g, h, p(name + ".proj.weight"), p(name + ".proj.bias"), stride, 0)
                           : h;
            h = relu(g, add(g, branch2, skip));
            tap(name + ".out", h);
            in_c = out_c;
            feat = h;
        }
    }

    Var reg;
    if (cfg_.head == Head::global) {
        reg = global_avg_pool(g, feat);
    } else {
        // Inlined bilinear head (same sequence as bilinear_head()) so the
        // reduction conv output stays reachable for feature-map taps.
        Var rc = conv2d(g, feat, p("head.reduce.weight"), p("head.reduce.bias"), 1, 0);
        tap("head.reduce", rc);
        Var hb = cfg_.bilinear.signed_sqrt ? signed_sqrt(g, rc) : rc;
        hb = bilinear_pool(g, hb);
        hb = dropout(g, hb, cfg_.bilinear.dropout_rate, rng, training);
        reg = linear(g, hb, p("head.fc.weight"), p("head.fc.bias"));
    }
    return linear(g, reg, p("out.weight"), p("out.bias"));
}

Tensor Model::predict(const Tensor& batch) const {
    GraphT<float> g;
    Bound bound = bind(g, false);
    Var in = g.constant(batch);
    Rng rng(0);  // dropout is inactive in inference mode; never drawn from
    Var out = forward(g, bound, in, false, rng);
    return g.value(out);
}

}  // namespace demo
