#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "demo/synth.hpp"
#include "demo/trainer.hpp"

using namespace demo;

namespace {

float loss_value(const std::vector<float>& pred, const std::vector<float>& target, Shape shape,
                 float a) {
    Graph g;
    Var p = g.constant(Tensor(shape, pred));
    Var t = g.constant(Tensor(shape, target));
    return g.value(l1l2_loss(g, p, t, a)).data[0];
}

SplitDataset tiny_dataset(int n, std::uint64_t seed) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("demo_trainer_" + std::to_string(seed) + "_" + std::to_string(n));
    const SynthPaths paths = write_synth_dataset(dir, n, seed);
    return build_dataset(parse_image_csv(paths.images), parse_crowd_labels(paths.labels),
                         load_norms(paths.norms), 2, nullptr);
}

ModelConfig small_model(std::uint64_t seed) {
    ModelConfig cfg;
    cfg.stage_widths = {4, 4, 8, 8};
    cfg.seed = seed;
    return cfg;
}

}  // namespace

TEST_CASE("loss: exact values from the combined L1+L2 form") {
    CHECK(loss_value({3.0f}, {3.0f}, {1, 1}, 2.0f) == 0.0f);
    // e = 1, a = 2: 1 + 2
    CHECK(loss_value({0.0f}, {1.0f}, {1, 1}, 2.0f) == 3.0f);
    // e = 0.5, a = 2: 0.25 + 1.0
    CHECK(loss_value({0.0f}, {0.5f}, {1, 1}, 2.0f) == 1.25f);
    // averaged over N*D elements
    CHECK(loss_value({0, 0, 0, 0}, {1, 1, 1, 1}, {2, 2}, 2.0f) == 3.0f);
}

TEST_CASE("loss: a=0 reduces to plain MSE") {
    Rng rng(51);
    std::vector<float> p(12), t(12);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = static_cast<float>(rng.uniform(-2, 2));
        t[i] = static_cast<float>(rng.uniform(-2, 2));
    }
    double mse = 0;
    for (std::size_t i = 0; i < p.size(); ++i) mse += (t[i] - p[i]) * (t[i] - p[i]);
    mse /= static_cast<double>(p.size());
    CHECK(loss_value(p, t, {3, 4}, 0.0f) == doctest::Approx(mse).epsilon(1e-6));
}

TEST_CASE("loss properties: non-negative, zero iff equal, monotone in a") {
    Rng rng(52);
    for (int it = 0; it < 50; ++it) {
        std::vector<float> p(6), t(6);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = static_cast<float>(rng.uniform(-3, 3));
            t[i] = static_cast<float>(rng.uniform(-3, 3));
        }
        const float l0 = loss_value(p, t, {2, 3}, 0.0f);
        const float l1 = loss_value(p, t, {2, 3}, 1.0f);
        const float l2 = loss_value(p, t, {2, 3}, 2.0f);
        CHECK(l0 >= 0.0f);
        CHECK(l1 >= l0);
        CHECK(l2 >= l1);
    }
    CHECK(loss_value({1, 2}, {1, 2}, {1, 2}, 2.0f) == 0.0f);

    Graph g;
    Var p = g.constant(Tensor::ones({2, 2}));
    Var t = g.constant(Tensor::ones({2, 3}));
    CHECK_THROWS_AS(l1l2_loss(g, p, t, 2.0f), ShapeError);
}

TEST_CASE("lr_at follows the halving schedule") {
    TrainConfig cfg;  // lr0 = 0.001, halve every 20
    cfg.max_epochs = 100;
    CHECK(lr_at(0, cfg) == 0.001);
    CHECK(lr_at(19, cfg) == 0.001);
    CHECK(lr_at(20, cfg) == 0.0005);
    CHECK(lr_at(45, cfg) == 0.00025);
    // non-increasing, piecewise constant with the halving period
    double prev = lr_at(0, cfg);
    for (int e = 1; e < 100; ++e) {
        const double lr = lr_at(e, cfg);
        CHECK(lr <= prev);
        CHECK(lr == cfg.lr0 * std::pow(0.5, e / cfg.lr_halve_every));
        prev = lr;
    }
    CHECK_THROWS_AS(lr_at(100, cfg), ContractError);
}

TEST_CASE("sgd_step: hand-computed updates") {
    // momentum 0: p = 1 - 0.1*2 = 0.8
    {
        std::vector<float> p{1.0f}, g{2.0f}, v{0.0f};
        sgd_step(p, g, v, 0.1, 0.0);
        CHECK(p[0] == doctest::Approx(0.8).epsilon(1e-6));
    }
    // zero gradient, zero velocity: unchanged
    {
        std::vector<float> p{1.5f}, g{0.0f}, v{0.0f};
        sgd_step(p, g, v, 0.1, 0.9);
        CHECK(p[0] == 1.5f);
    }
    // two steps, momentum 0.9, g = 1, lr = 0.1:
    //   v1 = -0.1,  p1 = 0.9
    //   v2 = -0.19, p2 = 0.71  (total movement -0.29)
    {
        std::vector<float> p{1.0f}, g{1.0f}, v{0.0f};
        sgd_step(p, g, v, 0.1, 0.9);
        sgd_step(p, g, v, 0.1, 0.9);
        CHECK(v[0] == doctest::Approx(-0.19).epsilon(1e-6));
        CHECK(p[0] == doctest::Approx(0.71).epsilon(1e-6));
    }
}

TEST_CASE("one zero-momentum step on a quadratic bowl reduces the loss") {
    // f(p) = p^2, gradient 2p, start at p = 1, lr = 1e-3
    std::vector<float> p{1.0f}, v{0.0f};
    const float before = p[0] * p[0];
    std::vector<float> g{2.0f * p[0]};
    sgd_step(p, g, v, 1e-3, 0.0);
    CHECK(p[0] * p[0] < before);
}

TEST_CASE("training is deterministic for a fixed seed") {
    const SplitDataset ds = tiny_dataset(20, 61);
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 8;
    cfg.seed = 4;

    const TrainResult r1 = train(Model::build(small_model(3)), ds, cfg);
    const TrainResult r2 = train(Model::build(small_model(3)), ds, cfg);
    REQUIRE(r1.history.size() == r2.history.size());
    for (std::size_t i = 0; i < r1.history.size(); ++i) {
        CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
        CHECK(r1.history[i].val_rmse[0] == r2.history[i].val_rmse[0]);
    }
    for (std::size_t i = 0; i < r1.model.params().size(); ++i)
        CHECK(r1.model.params()[i].tensor.data == r2.model.params()[i].tensor.data);
}

TEST_CASE("training stays deterministic with active dropout in the bilinear head") {
    const SplitDataset ds = tiny_dataset(12, 64);
    ModelConfig mc;
    mc.stage_widths = {4, 4, 8, 8};
    mc.head = Head::bilinear;
    mc.bilinear.reduce_channels = 4;
    mc.bilinear.post_fc_dim = 8;
    mc.bilinear.dropout_rate = 0.3;
    mc.seed = 2;
    TrainConfig cfg;
    cfg.max_epochs = 3;
    cfg.batch_size = 4;
    cfg.seed = 6;

    const TrainResult r1 = train(Model::build(mc), ds, cfg);
    const TrainResult r2 = train(Model::build(mc), ds, cfg);
    for (std::size_t i = 0; i < r1.history.size(); ++i)
        CHECK(r1.history[i].train_loss == r2.history[i].train_loss);
    for (std::size_t i = 0; i < r1.model.params().size(); ++i)
        CHECK(r1.model.params()[i].tensor.data == r2.model.params()[i].tensor.data);
}

TEST_CASE("training reduces the loss on a tiny memorization problem") {
    const SplitDataset ds = tiny_dataset(10, 62);
    TrainConfig cfg;
    cfg.max_epochs = 60;
    cfg.batch_size = 2;
    cfg.lr_halve_every = 30;
    cfg.seed = 5;
    cfg.augment_flip = false;

    const TrainResult r = train(Model::build(small_model(6)), ds, cfg);
    CHECK(r.history.back().train_loss < 0.5 * r.history.front().train_loss);
    CHECK(r.best_epoch >= 0);
}

TEST_CASE("non-finite loss aborts with epoch and batch in the message") {
    const SplitDataset ds = tiny_dataset(10, 63);
    TrainConfig cfg;
    cfg.max_epochs = 50;
    cfg.batch_size = 8;
    cfg.lr0 = 1e18;  // guaranteed blow-up
    cfg.lr_halve_every = 100;
    try {
        train(Model::build(small_model(7)), ds, cfg);
        FAIL("expected TrainAbort");
    } catch (const TrainAbort& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
        CHECK(std::string(e.what()).find("batch") != std::string::npos);
    }
}

TEST_CASE("history csv formatting") {
    CHECK(history_csv_header(2) == "epoch,lr,train_loss,val_rmse_v,val_rmse_a\n");
    CHECK(history_csv_header(3) == "epoch,lr,train_loss,val_rmse_v,val_rmse_a,val_rmse_d\n");
    EpochRow row;
    row.epoch = 3;
    row.lr = 0.0005;
    row.train_loss = 1.5;
    row.val_rmse = {0.25, 0.5, 0.0};
    row.dims = 2;
    CHECK(history_csv_row(row) == "3,0.0005,1.5,0.25,0.5\n");
}
