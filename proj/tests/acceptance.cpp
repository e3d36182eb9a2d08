// Acceptance suite: one line per criterion, non-zero exit if any fails.
// Criterion 9 needs the original full-scale CSV files and is skipped unless
// DEMO_FER2013_CSV and DEMO_FERPLUS_CSV point at them.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "demo/bilinear.hpp"
#include "demo/checkpoint.hpp"
#include "demo/cli.hpp"
#include "demo/evaluator.hpp"
#include "demo/grad_check.hpp"
#include "demo/synth.hpp"
#include "demo/trainer.hpp"

using namespace demo;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, const std::string& what, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void report_skip(int criterion, const std::string& what, const std::string& why) {
    std::printf("[SKIP] criterion %d: %s -- %s\n", criterion, what.c_str(), why.c_str());
    std::fflush(stdout);
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TensorD rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(std::move(shape));
    for (auto& v : t.data) v = rng.uniform(lo, hi);
    return t;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"demo"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

// --- criterion 1: gradient suite ---------------------------------------

void criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    constexpr double kEps = 1e-3, kTol = 1e-4;
    Rng rng(1001);
    double worst = 0.0;
    std::string worst_op = "none";

    auto track = [&](const char* op, double err) {
        if (err > worst) {
            worst = err;
            worst_op = op;
        }
    };

    for (int it = 0; it < 10; ++it) {
        {  // conv2d
            auto x = rand_tensor({2, 2, 5, 4}, rng);
            auto w = rand_tensor({3, 2, 3, 3}, rng);
            auto b = rand_tensor({3}, rng);
            const int stride = it % 2 ? 2 : 1;
            const int ho = (5 + 2 - 3) / stride + 1, wo = (4 + 2 - 3) / stride + 1;
            const auto probe = rand_tensor({2, 3, ho, wo}, rng);
            track("conv2d", grad_check(
                                [&](GraphD& g, const std::vector<Var>& in) {
                                    Var y = conv2d(g, in[0], in[1], in[2], stride, 1);
                                    return sum(g, mul(g, y, g.constant(probe)));
                                },
                                {x, w, b}, kEps));
        }
        {  // linear
            auto x = rand_tensor({3, 5}, rng);
            auto w = rand_tensor({4, 5}, rng);
            auto b = rand_tensor({4}, rng);
            const auto probe = rand_tensor({3, 4}, rng);
            track("linear", grad_check(
                                [&](GraphD& g, const std::vector<Var>& in) {
                                    Var y = linear(g, in[0], in[1], in[2]);
                                    return sum(g, mul(g, y, g.constant(probe)));
                                },
                                {x, w, b}, kEps));
        }
        {  // relu, probed away from the kink
            TensorD x(Shape{4, 6});
            for (auto& v : x.data) {
                const double mag = 10 * kEps + 1e-3 + rng.uniform();
                v = rng.uniform() < 0.5 ? -mag : mag;
            }
            const auto probe = rand_tensor({4, 6}, rng);
            track("relu", grad_check(
                              [&](GraphD& g, const std::vector<Var>& in) {
                                  return sum(g, mul(g, relu(g, in[0]), g.constant(probe)));
                              },
                              {x}, kEps));
        }
        {  // global_avg_pool
            auto x = rand_tensor({2, 3, 4, 5}, rng);
            const auto probe = rand_tensor({2, 3}, rng);
            track("global_avg_pool",
                  grad_check(
                      [&](GraphD& g, const std::vector<Var>& in) {
                          return sum(g, mul(g, global_avg_pool(g, in[0]), g.constant(probe)));
                      },
                      {x}, kEps));
        }
        {  // bilinear_pool
            auto x = rand_tensor({2, 3, 3, 3}, rng);
            const auto probe = rand_tensor({2, 9}, rng);
            track("bilinear_pool",
                  grad_check(
                      [&](GraphD& g, const std::vector<Var>& in) {
                          return sum(g, mul(g, bilinear_pool(g, in[0]), g.constant(probe)));
                      },
                      {x}, kEps));
        }
        {  // bilinear_head with dropout off
            BilinearHeadConfig cfg;
            cfg.reduce_channels = 2;
            cfg.post_fc_dim = 3;
            cfg.dropout_rate = 0.0;
            auto x = rand_tensor({1, 3, 3, 3}, rng);
            auto rw = rand_tensor({2, 3, 1, 1}, rng);
            auto rb = rand_tensor({2}, rng);
            auto fw = rand_tensor({3, 4}, rng);
            auto fb = rand_tensor({3}, rng);
            const auto probe = rand_tensor({1, 3}, rng);
            track("bilinear_head",
                  grad_check(
                      [&](GraphD& g, const std::vector<Var>& in) {
                          Rng drop_rng(0);
                          Var y = bilinear_head(g, in[0], cfg, in[1], in[2], in[3], in[4],
                                                drop_rng, false);
                          return sum(g, mul(g, y, g.constant(probe)));
                      },
                      {x, rw, rb, fw, fb}, kEps));
        }
        {  // combined L1+L2 loss, errors kept off the |e| kink
            auto pred = rand_tensor({4, 3}, rng);
            TensorD target(Shape{4, 3});
            for (std::size_t i = 0; i < target.data.size(); ++i) {
                const double off = 0.05 + rng.uniform();
                target.data[i] = pred.data[i] + (rng.uniform() < 0.5 ? -off : off);
            }
            track("loss", grad_check(
                              [&](GraphD& g, const std::vector<Var>& in) {
                                  return l1l2_loss(g, in[0], g.constant(target), 2.0);
                              },
                              {pred}, kEps));
        }
    }

    const double elapsed = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail, "max rel err %.3g (%s), %.1fs", worst, worst_op.c_str(),
                  elapsed);
    report(1, "gradient suite (7 ops x 10 instances, eps=1e-3, tol=1e-4, <60s)",
           worst < 1e-4 && elapsed < 60.0, detail);
}

// --- criterion 2: Eq-1 weighted-mean oracle -----------------------------

void criterion_label_mapping() {
    Rng rng(1002);
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        NormTable norms;
        for (int e = 0; e < kEmotionCount; ++e)
            for (int d = 0; d < 3; ++d) {
                norms.mean[e][d] = rng.uniform(1, 9);
                norms.sd[e][d] = rng.uniform(0.5, 3);
            }
        CrowdLabelCounts counts;
        int total = 0;
        for (int e = 0; e < kEmotionCount; ++e) {
            counts.votes[e] = static_cast<int>(rng.below(6));
            total += counts.votes[e];
        }
        if (total == 0) counts.votes[static_cast<int>(rng.below(kEmotionCount))] = 1;
        counts.discarded = static_cast<int>(rng.below(4));

        const EmotionVector got = map_labels(counts, norms, 3);
        // independent oracle: accumulate weights and weighted sums separately
        for (int d = 0; d < 3; ++d) {
            double wsum = 0, ws = 0;
            for (int e = 0; e < kEmotionCount; ++e) {
                wsum += counts.votes[e];
                ws += static_cast<double>(counts.votes[e]) * norms.mean[e][d];
            }
            worst = std::max(worst, std::abs(got.component(d) - ws / wsum));
        }
    }

    // anchor: pure happiness returns the happiness norms row exactly
    NormTable anchor = synth_norms();
    CrowdLabelCounts pure;
    pure.votes[static_cast<int>(Emotion::happiness)] = 10;
    const EmotionVector v = map_labels(pure, anchor, 3);
    const bool anchor_ok = v.valence == 8.21 && v.arousal == 6.49 && v.dominance == 6.63;

    char detail[120];
    std::snprintf(detail, sizeof detail, "max |diff| %.3g, anchor %s", worst,
                  anchor_ok ? "exact" : "NOT exact");
    report(2, "label mapping vs weighted-mean oracle (1000 draws, 1e-12) + happiness anchor",
           worst < 1e-12 && anchor_ok, detail);
}

// --- criterion 3: metric oracle ------------------------------------------

void criterion_metrics() {
    Rng rng(1003);
    double worst = 0.0;
    bool order_ok = true;
    for (int dims : {2, 3}) {
        for (int it = 0; it < 1000; ++it) {
            const std::size_t n = 2 + rng.below(40);
            std::vector<EmotionVector> preds(n), targets(n);
            for (std::size_t i = 0; i < n; ++i) {
                preds[i].dims = targets[i].dims = dims;
                preds[i].valence = rng.uniform(1, 9);
                preds[i].arousal = rng.uniform(1, 9);
                targets[i].valence = rng.uniform(1, 9);
                targets[i].arousal = rng.uniform(1, 9);
                if (dims == 3) {
                    preds[i].dominance = rng.uniform(1, 9);
                    targets[i].dominance = rng.uniform(1, 9);
                }
            }
            for (int d = 0; d < dims; ++d) {
                std::vector<double> y(n), yh(n);
                for (std::size_t i = 0; i < n; ++i) {
                    y[i] = targets[i].component(d);
                    yh[i] = preds[i].component(d);
                }
                double s2 = 0, s1 = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    s2 += (y[i] - yh[i]) * (y[i] - yh[i]);
                    s1 += std::abs(y[i] - yh[i]);
                }
                const double r = rmse(y, yh), m = mae(y, yh);
                worst = std::max(worst, std::abs(r - std::sqrt(s2 / n)));
                worst = std::max(worst, std::abs(m - s1 / n));
                if (r < m - 1e-12) order_ok = false;

                double my = 0, myh = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    my += y[i];
                    myh += yh[i];
                }
                my /= n;
                myh /= n;
                double cov = 0, vy = 0, vyh = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    cov += (y[i] - my) * (yh[i] - myh);
                    vy += (y[i] - my) * (y[i] - my);
                    vyh += (yh[i] - myh) * (yh[i] - myh);
                }
                if (vy > 0 && vyh > 0)
                    worst = std::max(worst,
                                     std::abs(pearson(y, yh) - cov / std::sqrt(vy) / std::sqrt(vyh)));
            }
            // accuracy against a direct count
            const double threshold = rng.uniform(0, 2);
            std::size_t hits = 0;
            for (std::size_t i = 0; i < n; ++i) {
                double s = 0;
                for (int d = 0; d < dims; ++d)
                    s += std::abs(targets[i].component(d) - preds[i].component(d));
                if (s / dims < threshold) ++hits;
            }
            worst = std::max(worst, std::abs(accuracy(preds, targets, threshold) -
                                             static_cast<double>(hits) / n));
        }
    }
    char detail[120];
    std::snprintf(detail, sizeof detail, "max |diff| %.3g, rmse>=mae %s", worst,
                  order_ok ? "held" : "VIOLATED");
    report(3, "metrics vs naive reimplementations (1000 draws x D=2,3, 1e-10)",
           worst < 1e-10 && order_ok, detail);
}

// --- criterion 4: bilinear equivalence ------------------------------------

void criterion_bilinear() {
    // Runs on the double-precision verification mode of the same templated
    // kernels (the float path is covered by the gradient suite and the
    // kernel-parity tests).
    Rng rng(1004);
    double worst_rel = 0.0, worst_asym = 0.0, worst_scale = 0.0;
    for (int c : {1, 2, 4, 8}) {
        for (int h = 1; h <= 6; ++h) {
            for (int w = 1; w <= 6; ++w) {
                std::vector<double> xd(static_cast<std::size_t>(c) * h * w);
                for (auto& v : xd) v = rng.uniform(-2, 2);

                GraphD g;
                Var x = g.constant(TensorD(Shape{1, c, h, w}, xd));
                const auto& y = g.value(bilinear_pool(g, x)).data;

                // explicit per-location outer-product average
                std::vector<double> oracle(static_cast<std::size_t>(c) * c, 0.0);
                for (int l = 0; l < h * w; ++l)
                    for (int a = 0; a < c; ++a)
                        for (int b = 0; b < c; ++b)
                            oracle[static_cast<std::size_t>(a) * c + b] +=
                                xd[a * h * w + l] * xd[b * h * w + l];
                for (auto& v : oracle) v /= h * w;

                for (std::size_t i = 0; i < oracle.size(); ++i) {
                    const double denom = std::max(std::abs(oracle[i]), 1e-6);
                    worst_rel = std::max(worst_rel, std::abs(y[i] - oracle[i]) / denom);
                }
                for (int a = 0; a < c; ++a)
                    for (int b = 0; b < c; ++b)
                        worst_asym =
                            std::max(worst_asym, std::abs(y[a * c + b] - y[b * c + a]));

                // s^2 scaling
                const double s = 1.5;
                std::vector<double> xs(xd.size());
                for (std::size_t i = 0; i < xd.size(); ++i) xs[i] = s * xd[i];
                Var x2 = g.constant(TensorD(Shape{1, c, h, w}, xs));
                const auto& y2 = g.value(bilinear_pool(g, x2)).data;
                for (std::size_t i = 0; i < y2.size(); ++i) {
                    const double expect = y[i] * s * s;
                    const double denom = std::max(std::abs(expect), 1e-6);
                    worst_scale = std::max(worst_scale, std::abs(y2[i] - expect) / denom);
                }
            }
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof detail, "oracle rel %.3g, asymmetry %.3g, scaling rel %.3g",
                  worst_rel, worst_asym, worst_scale);
    report(4, "bilinear pooling vs outer-product oracle ({1,2,4,8}x{1..6}^2)",
           worst_rel < 1e-6 && worst_asym < 1e-9 && worst_scale < 1e-6, detail);
}

// --- criterion 5: overfit smoke test --------------------------------------

SplitDataset overfit_dataset() {
    const fs::path dir = fs::temp_directory_path() / "demo_acceptance_overfit";
    const SynthPaths paths = write_synth_dataset(dir, 40, 2024);  // 32 train / 4 val / 4 test
    return build_dataset(parse_image_csv(paths.images), parse_crowd_labels(paths.labels),
                         load_norms(paths.norms), 2, nullptr);
}

void criterion_overfit() {
    const auto t0 = std::chrono::steady_clock::now();
    const SplitDataset ds = overfit_dataset();

    TrainConfig tc;  // pinned: a=2, lr0=0.001, momentum=0.9, 200 epochs
    tc.a = 2.0;
    tc.lr0 = 0.001;
    tc.momentum = 0.9;
    tc.max_epochs = 200;
    tc.lr_halve_every = 28;  // deep late decay quiets the L1 subgradient jitter
    tc.batch_size = 4;
    tc.seed = 7;
    tc.augment_flip = false;  // memorization target, no augmentation noise

    ModelConfig global_cfg;  // vgg_tiny / global / VA / 48
    global_cfg.seed = 1;
    const TrainResult global_run = train(Model::build(global_cfg), ds, tc);
    const double global_loss = global_run.history.back().train_loss;

    ModelConfig bilinear_cfg = global_cfg;
    bilinear_cfg.head = Head::bilinear;
    bilinear_cfg.bilinear.reduce_channels = 16;
    bilinear_cfg.bilinear.post_fc_dim = 32;
    bilinear_cfg.bilinear.dropout_rate = 0.0;
    const TrainResult bilinear_run = train(Model::build(bilinear_cfg), ds, tc);
    const double bilinear_loss = bilinear_run.history.back().train_loss;

    const double elapsed = seconds_since(t0);
    char detail[160];
    std::snprintf(detail, sizeof detail, "global %.5f (<0.01), bilinear %.5f (<0.05), %.0fs (<300)",
                  global_loss, bilinear_loss, elapsed);
    report(5, "overfit smoke test (32 images, 200 epochs, a=2, lr0=1e-3, momentum 0.9)",
           global_loss < 0.01 && bilinear_loss < 0.05 && elapsed < 300.0, detail);
}

// --- criterion 6: threshold sweep semantics --------------------------------

void criterion_sweep() {
    Rng rng(1006);
    bool ok = true;
    std::string why;

    std::vector<EmotionVector> targets, preds;
    double max_err = 0.0;
    for (int i = 0; i < 200; ++i) {
        EmotionVector t{rng.uniform(2, 8), rng.uniform(2, 8), 0.0, 2};
        EmotionVector p{t.valence + rng.uniform(-1.2, 1.2), t.arousal + rng.uniform(-1.2, 1.2),
                        0.0, 2};
        targets.push_back(t);
        preds.push_back(p);
        max_err = std::max(max_err, per_image_score(p, t, PerImageScore::mean_abs));
    }

    const auto grid = uniform_grid(0, 2, 101);
    const SweepCurve curve = threshold_sweep(preds, targets, grid);
    if (curve.acc.size() != 101) {
        ok = false;
        why = "grid size";
    }
    for (std::size_t i = 1; i < curve.acc.size(); ++i)
        if (curve.acc[i] < curve.acc[i - 1]) {
            ok = false;
            why = "not non-decreasing";
        }
    if (curve.acc.front() != 0.0) {
        ok = false;
        why = "imperfect predictor must score 0 at T=0";
    }
    if (accuracy(preds, targets, max_err + 1e-9) != 1.0) {
        ok = false;
        why = "accuracy above max error must be 1";
    }

    // smallest threshold achieving the reference accuracy, vs a sort oracle
    for (double ref : {0.25, 0.5, 0.7116, 0.9, 1.0}) {
        const auto got = curve.smallest_threshold(ref);
        std::vector<double> scores;
        for (std::size_t i = 0; i < preds.size(); ++i)
            scores.push_back(per_image_score(preds[i], targets[i], PerImageScore::mean_abs));
        std::sort(scores.begin(), scores.end());
        std::optional<double> oracle;
        for (double t : grid) {
            const auto below = std::lower_bound(scores.begin(), scores.end(), t) - scores.begin();
            if (static_cast<double>(below) / scores.size() >= ref) {
                oracle = t;
                break;
            }
        }
        if (got != oracle) {
            ok = false;
            why = "smallest-threshold mismatch";
        }
    }
    // unreachable reference accuracy reports not-achieved
    if (curve.smallest_threshold(2.0).has_value()) {
        ok = false;
        why = "unreachable accuracy must be not-achieved";
    }

    report(6, "threshold-sweep properties and smallest-threshold sort oracle", ok, why);
}

// --- criterion 7: schedule and loss constants --------------------------------

void criterion_constants() {
    TrainConfig cfg;
    cfg.max_epochs = 100;
    const bool lr_ok =
        lr_at(0, cfg) == 0.001 && lr_at(20, cfg) == 0.0005 && lr_at(45, cfg) == 0.00025;

    Graph g;
    Var p = g.constant(Tensor(Shape{1, 1}, {0.0f}));
    Var t = g.constant(Tensor(Shape{1, 1}, {1.0f}));
    const float loss = g.value(l1l2_loss(g, p, t, 2.0f)).data[0];
    const bool loss_ok = loss == 3.0f;

    char detail[120];
    std::snprintf(detail, sizeof detail, "lr(0,20,45)=(%g,%g,%g), loss(e=1,a=2)=%g", lr_at(0, cfg),
                  lr_at(20, cfg), lr_at(45, cfg), loss);
    report(7, "schedule constants and loss(e=1,a=2)=3", lr_ok && loss_ok, detail);
}

// --- criterion 8: determinism -------------------------------------------

void criterion_determinism() {
    const fs::path base = fs::temp_directory_path() / "demo_acceptance_det";
    fs::remove_all(base);
    const fs::path data = base / "data";
    bool ok = run_cli({"synth", "--n", "20", "--seed", "3", "--out-dir", data.string()}) == 0;

    const fs::path cfg_path = base / "config.json";
    std::ofstream(cfg_path) << R"({
      "model": {"stage_widths": [4, 4, 8, 8], "seed": 5},
      "train": {"max_epochs": 4, "batch_size": 8, "seed": 13}
    })";

    const fs::path run1 = base / "run1", run2 = base / "run2";
    ok = ok && run_cli({"train", "--data-dir", data.string(), "--config", cfg_path.string(),
                        "--out-dir", run1.string()}) == 0;
    ok = ok && run_cli({"train", "--data-dir", data.string(), "--config", cfg_path.string(),
                        "--out-dir", run2.string()}) == 0;

    std::string why;
    if (ok) {
        if (slurp(run1 / "history.csv") != slurp(run2 / "history.csv")) {
            ok = false;
            why = "history.csv differs";
        }
        if (slurp(run1 / "final.ckpt") != slurp(run2 / "final.ckpt")) {
            ok = false;
            why = "final.ckpt differs";
        }
        if (slurp(run1 / "best.ckpt") != slurp(run2 / "best.ckpt")) {
            ok = false;
            why = "best.ckpt differs";
        }
    } else {
        why = "train run failed";
    }

    if (ok) {
        // round trip: identical predictions bit for bit
        const Model a = load_checkpoint(run1 / "final.ckpt");
        const fs::path resaved = base / "resaved.ckpt";
        save_checkpoint(a, TrainMeta{}, resaved);
        const Model b = load_checkpoint(resaved);
        Rng rng(9);
        Tensor batch(Shape{3, 1, 48, 48});
        for (auto& v : batch.data) v = static_cast<float>(rng.uniform(0, 1));
        if (a.predict(batch).data != b.predict(batch).data) {
            ok = false;
            why = "round-trip predictions differ";
        }
    }
    report(8, "byte-identical reruns of cmd_train and bit-exact checkpoint round trip", ok, why);
}

// --- criterion 9: conditional full-data check -----------------------------

void criterion_full_data() {
    const char* images_env = std::getenv("DEMO_FER2013_CSV");
    const char* labels_env = std::getenv("DEMO_FERPLUS_CSV");
    if (!images_env || !labels_env) {
        report_skip(9, "full FER-2013 + FERPlus split counts",
                    "set DEMO_FER2013_CSV and DEMO_FERPLUS_CSV to run");
        return;
    }
    const auto images = parse_image_csv(images_env);
    const auto labels = parse_crowd_labels(labels_env);
    BuildStats stats;
    const SplitDataset ds = build_dataset(images, labels, synth_norms(), 2, &stats);
    char detail[200];
    std::snprintf(detail, sizeof detail, "parsed %zu, retained %zu, splits %zu/%zu/%zu",
                  images.size(), stats.retained, ds.train.size(), ds.val.size(), ds.test.size());
    report(9, "full-data retention 35714 and splits 28561/3579/3574",
           images.size() == 35887 && stats.retained == 35714 && ds.train.size() == 28561 &&
               ds.val.size() == 3579 && ds.test.size() == 3574,
           detail);
}

}  // namespace

int main() {
    criterion_gradients();
    criterion_label_mapping();
    criterion_metrics();
    criterion_bilinear();
    criterion_overfit();
    criterion_sweep();
    criterion_constants();
    criterion_determinism();
    criterion_full_data();

    if (g_failures) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
