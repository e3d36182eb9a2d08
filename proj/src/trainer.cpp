#include "demo/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

namespace demo {

namespace {

// Plain forward (no augmentation, no flip averaging) per-dimension RMSE.
std::array<double, 3> validation_rmse(const Model& model, const std::vector<Tensor>& inputs,
                                      const std::vector<const EmotionVector*>& targets, int dims) {
    std::array<double, 3> sq{};
    const std::size_t n = inputs.size();
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t end = std::min(n, start + kChunk);
        std::vector<Tensor> chunk(inputs.begin() + start, inputs.begin() + end);
        std::vector<const EmotionVector*> tchunk(targets.begin() + start, targets.begin() + end);
        auto [x, y] = make_batch(chunk, tchunk, dims);
        const Tensor pred = model.predict(x);
        for (std::size_t i = 0; i < chunk.size(); ++i)
            for (int d = 0; d < dims; ++d) {
                const double e = static_cast<double>(y.data[i * dims + d]) -
                                 static_cast<double>(pred.data[i * dims + d]);
                sq[d] += e * e;
            }
    }
    std::array<double, 3> out{};
    for (int d = 0; d < dims; ++d) out[d] = std::sqrt(sq[d] / static_cast<double>(n));
    return out;
}

}  // namespace

TrainResult train(Model model, const SplitDataset& dataset, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
    cfg.validate();
    if (dataset.train.empty()) throw ConfigError("train: training split is empty");
    const ModelConfig& mc = model.config();
    const int dims = mc.output_dims;
    if (dataset.train.front().target.dims != dims)
        throw ConfigError("train: dataset targets have " +
                          std::to_string(dataset.train.front().target.dims) +
                          " dims but the model outputs " + std::to_string(dims));

    Rng rng(cfg.seed);

    std::vector<Tensor> pre_train;
    std::vector<const EmotionVector*> train_targets;
    pre_train.reserve(dataset.train.size());
    for (const auto& ex : dataset.train) {
        pre_train.push_back(preprocess(ex.image, mc.input_size, mc.input_channels));
        train_targets.push_back(&ex.target);
    }
    std::vector<Tensor> pre_val;
    std::vector<const EmotionVector*> val_targets;
    for (const auto& ex : dataset.val) {
        pre_val.push_back(preprocess(ex.image, mc.input_size, mc.input_channels));
        val_targets.push_back(&ex.target);
    }

    std::vector<std::vector<float>> velocity(model.params().size());
    for (std::size_t i = 0; i < velocity.size(); ++i)
        velocity[i].assign(model.params()[i].tensor.data.size(), 0.0f);

    TrainResult res{model, model, {}, -1, std::numeric_limits<double>::infinity()};

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const double lr = lr_at(epoch, cfg);
        const auto batches = batch_indices(pre_train.size(), cfg.batch_size, rng, true);

        double loss_sum = 0.0;
        std::size_t seen = 0;
        for (std::size_t bi = 0; bi < batches.size(); ++bi) {
            const auto& batch = batches[bi];
            std::vector<Tensor> inputs;
            std::vector<const EmotionVector*> targets;
            inputs.reserve(batch.size());
            for (std::size_t idx : batch) {
                inputs.push_back(cfg.augment_flip ? augment_flip(pre_train[idx], rng)
                                                  : pre_train[idx]);
                targets.push_back(train_targets[idx]);
            }
            auto [x, y] = make_batch(inputs, targets, dims);

            GraphT<float> g;
            Model::Bound bound = model.bind(g, true);
            Var out = model.forward(g, bound, g.constant(std::move(x)), true, rng);
            Var loss = l1l2_loss(g, out, g.constant(std::move(y)), static_cast<float>(cfg.a));
            const double loss_value = g.value(loss).data[0];
            if (!std::isfinite(loss_value))
                throw TrainAbort("non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                                 std::to_string(bi));
            g.backward(loss);

            for (std::size_t pi = 0; pi < model.params().size(); ++pi)
                sgd_step(model.params()[pi].tensor.data, g.grad(bound.vars[pi]), velocity[pi], lr,
                         cfg.momentum);

            loss_sum += loss_value * static_cast<double>(batch.size());
            seen += batch.size();
        }

        EpochRow row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<double>(seen);
        row.dims = dims;
        row.val_rmse.fill(std::numeric_limits<double>::quiet_NaN());

        bool improved = false;
        if (!pre_val.empty()) {
            row.val_rmse = validation_rmse(model, pre_val, val_targets, dims);
            double avg = 0.0;
            for (int d = 0; d < dims; ++d) avg += row.val_rmse[d];
            avg /= dims;
            if (avg < res.best_val_rmse) {
                res.best_val_rmse = avg;
                res.best_epoch = epoch;
                res.best = model;
                improved = true;
            }
        }
        res.history.push_back(row);
        if (on_epoch) on_epoch(row, model, improved, res.best);
    }

    res.model = std::move(model);
    if (pre_val.empty()) {
        // No validation split: the final model doubles as the best one.
        res.best = res.model;
        res.best_epoch = cfg.max_epochs - 1;
        res.best_val_rmse = std::numeric_limits<double>::quiet_NaN();
    }
    return res;
}

std::string history_csv_header(int dims) {
    std::string h = "epoch,lr,train_loss,val_rmse_v,val_rmse_a";
    if (dims == 3) h += ",val_rmse_d";
    return h + "\n";
}

std::string history_csv_row(const EpochRow& row) {
    char buf[256];
    int n = std::snprintf(buf, sizeof buf, "%d,%.10g,%.10g,%.10g,%.10g", row.epoch, row.lr,
                          row.train_loss, row.val_rmse[0], row.val_rmse[1]);
    std::string s(buf, static_cast<std::size_t>(n));
    if (row.dims == 3) {
        std::snprintf(buf, sizeof buf, ",%.10g", row.val_rmse[2]);
        s += buf;
    }
    return s + "\n";
}

}  // namespace demo
