#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "demo/dataset.hpp"
#include "demo/graph.hpp"
#include "demo/model.hpp"

namespace demo {

struct TrainConfig {
    double a = 2.0;             // L1 mix weight in the combined loss
    double lr0 = 0.001;
    double momentum = 0.9;
    int max_epochs = 100;
    int lr_halve_every = 20;    // epochs between halvings
    int batch_size = 32;
    std::uint64_t seed = 0;
    bool augment_flip = true;

    void validate() const {
        if (a < 0) throw ConfigError("train: loss weight a must be >= 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train: momentum must be in [0,1)");
        if (lr0 <= 0) throw ConfigError("train: lr0 must be positive");
        if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
        if (lr_halve_every < 1) throw ConfigError("train: lr_halve_every must be >= 1");
        if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    }
};

// Combined squared-L2 / L1 regression loss, averaged over every element of
// the batch: mean(e^2 + a*|e|) with e = target - pred. The |e| subgradient
// at 0 is taken as 0.
template <typename T>
Var l1l2_loss(GraphT<T>& g, Var pred, Var target, T a) {
    const auto& pt = g.value(pred);
    const auto& tt = g.value(target);
    if (pt.shape != tt.shape)
        throw ShapeError("loss: prediction shape " + shape_str(pt.shape) +
                         " does not match target shape " + shape_str(tt.shape));
    if (a < T(0)) throw ConfigError("loss: a must be >= 0");
    const std::int64_t m = pt.numel();

    T acc = T(0);
    for (std::int64_t i = 0; i < m; ++i) {
        const T e = tt.data[i] - pt.data[i];
        acc += e * e + a * (e >= T(0) ? e : -e);
    }
    TensorT<T> out(Shape{1});
    out.data[0] = acc / static_cast<T>(m);

    auto bw = [pred, target, a, m](GraphT<T>& gr, Var self) {
        const T gy = gr.adjoint(self)[0];
        const auto& pv = gr.value(pred).data;
        const auto& tv = gr.value(target).data;
        const T inv_m = T(1) / static_cast<T>(m);
        const bool need_p = gr.needs_grad(pred);
        const bool need_t = gr.needs_grad(target);
        for (std::int64_t i = 0; i < m; ++i) {
            const T e = tv[i] - pv[i];
            const T sgn = e > T(0) ? T(1) : (e < T(0) ? T(-1) : T(0));
            const T de = (T(2) * e + a * sgn) * inv_m * gy;  // d loss / d e
            if (need_p) gr.adjoint(pred)[i] -= de;
            if (need_t) gr.adjoint(target)[i] += de;
        }
    };
    return g.push(std::move(out), {pred, target}, std::move(bw), "l1l2_loss");
}

// lr0 halved once per lr_halve_every epochs (step schedule).
inline double lr_at(int epoch, const TrainConfig& cfg) {
    if (epoch < 0 || epoch >= cfg.max_epochs) throw ContractError("lr_at: epoch out of range");
    return cfg.lr0 * std::pow(0.5, epoch / cfg.lr_halve_every);
}

// Classical (heavy-ball) momentum: v <- momentum*v - lr*g; p <- p + v.
inline void sgd_step(std::vector<float>& params, const std::vector<float>& grads,
                     std::vector<float>& velocity, double lr, double momentum) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw ShapeError("sgd_step: parameter/gradient/velocity sizes differ");
    const float flr = static_cast<float>(lr);
    const float fm = static_cast<float>(momentum);
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = fm * velocity[i] - flr * grads[i];
        params[i] += velocity[i];
    }
}

struct EpochRow {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    std::array<double, 3> val_rmse{};  // first `dims` entries valid
    int dims = 2;
};

struct TrainResult {
    Model model;       // final-epoch parameters
    Model best;        // best validation average-RMSE parameters
    std::vector<EpochRow> history;
    int best_epoch = -1;
    double best_val_rmse = 0.0;
};

// Called at the end of every epoch; `improved` marks a new best-validation
// model. Used by the CLI to stream the history CSV and keep checkpoints
// current so an abort preserves the last good state.
using EpochCallback =
    std::function<void(const EpochRow&, const Model& current, bool improved, const Model& best)>;

// Full training loop: shuffled minibatches, optional horizontal-flip
// augmentation, combined L1+L2 loss, SGD with classical momentum and the
// halving schedule. Throws TrainAbort naming epoch and batch if the loss
// goes non-finite. Deterministic for a fixed config.
TrainResult train(Model model, const SplitDataset& dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

std::string history_csv_header(int dims);
std::string history_csv_row(const EpochRow& row);

}  // namespace demo
