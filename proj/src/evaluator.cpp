#include "demo/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace demo {

namespace {

void check_pair(std::size_t ny, std::size_t nyhat, const char* op) {
    if (ny == 0) throw ContractError(std::string(op) + ": empty sequences");
    if (ny != nyhat) throw ShapeError(std::string(op) + ": sequence lengths differ");
}

}  // namespace

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y.size(), yhat.size(), "rmse");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        acc += e * e;
    }
    return std::sqrt(acc / static_cast<double>(y.size()));
}

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y.size(), yhat.size(), "mae");
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(y[i] - yhat[i]);
    return acc / static_cast<double>(y.size());
}

double pearson(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y.size(), yhat.size(), "pearson");
    const double n = static_cast<double>(y.size());
    double my = 0.0, myh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        my += y[i];
        myh += yhat[i];
    }
    my /= n;
    myh /= n;
    double cov = 0.0, vy = 0.0, vyh = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double dy = y[i] - my;
        const double dyh = yhat[i] - myh;
        cov += dy * dyh;
        vy += dy * dy;
        vyh += dyh * dyh;
    }
    if (vy == 0.0 || vyh == 0.0)
        throw UndefinedCorrelation("pearson: correlation undefined for a constant sequence");
    return cov / (std::sqrt(vy) * std::sqrt(vyh));
}

double per_image_score(const EmotionVector& pred, const EmotionVector& target, PerImageScore kind) {
    const int dims = target.dims;
    double acc = 0.0;
    for (int d = 0; d < dims; ++d) {
        const double e = target.component(d) - pred.component(d);
        acc += kind == PerImageScore::mean_abs ? std::abs(e) : e * e;
    }
    acc /= dims;
    return kind == PerImageScore::mean_abs ? acc : std::sqrt(acc);
}

double accuracy(const std::vector<EmotionVector>& preds, const std::vector<EmotionVector>& targets,
                double threshold, PerImageScore kind) {
    check_pair(preds.size(), targets.size(), "accuracy");
    if (threshold < 0) throw ContractError("accuracy: threshold must be >= 0");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < preds.size(); ++i)
        if (per_image_score(preds[i], targets[i], kind) < threshold) ++hits;
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<double> uniform_grid(double lo, double hi, int points) {
    if (points < 2 || hi <= lo) throw ConfigError("uniform_grid: need points >= 2 and hi > lo");
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

std::optional<double> SweepCurve::smallest_threshold(double ref_acc) const {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        if (acc[i] >= ref_acc) return thresholds[i];
    return std::nullopt;
}

SweepCurve threshold_sweep(const std::vector<EmotionVector>& preds,
                           const std::vector<EmotionVector>& targets,
                           const std::vector<double>& grid, PerImageScore kind) {
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] < grid[i - 1]) throw ContractError("threshold_sweep: grid must be ascending");
    check_pair(preds.size(), targets.size(), "threshold_sweep");

    // One pass over the scores, then a merge against the sorted grid.
    std::vector<double> scores(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i)
        scores[i] = per_image_score(preds[i], targets[i], kind);
    std::sort(scores.begin(), scores.end());

    SweepCurve curve;
    curve.thresholds = grid;
    curve.acc.reserve(grid.size());
    for (double t : grid) {
        const auto below =
            std::lower_bound(scores.begin(), scores.end(), t);  // strict: score < t
        curve.acc.push_back(static_cast<double>(below - scores.begin()) /
                            static_cast<double>(scores.size()));
    }
    return curve;
}

namespace {

Tensor mirror_batch(const Tensor& batch) {
    const int n = batch.shape[0], c = batch.shape[1], h = batch.shape[2], w = batch.shape[3];
    Tensor out(batch.shape);
    for (int in = 0; in < n; ++in)
        for (int ic = 0; ic < c; ++ic)
            for (int iy = 0; iy < h; ++iy) {
                const std::size_t row =
                    ((static_cast<std::size_t>(in) * c + ic) * h + iy) * w;
                for (int ix = 0; ix < w; ++ix)
                    out.data[row + ix] = batch.data[row + (w - 1 - ix)];
            }
    return out;
}

}  // namespace

Tensor flip_avg_predictions(const Model& model, const Tensor& batch) {
    if (batch.shape.size() != 4)
        throw ShapeError("flip_avg_predictions: expected [N,C,H,W], got " + shape_str(batch.shape));
    const Tensor a = model.predict(batch);
    const Tensor b = model.predict(mirror_batch(batch));
    Tensor out(a.shape);
    for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = (a.data[i] + b.data[i]) / 2.0f;
    return out;
}

EmotionVector predict_flip_avg(const Model& model, const Tensor& chw) {
    if (chw.shape.size() != 3)
        throw ShapeError("predict_flip_avg: expected [C,H,W], got " + shape_str(chw.shape));
    Tensor batch(Shape{1, chw.shape[0], chw.shape[1], chw.shape[2]}, chw.data);
    const Tensor pred = flip_avg_predictions(model, batch);
    EmotionVector v;
    v.dims = model.config().output_dims;
    v.valence = pred.data[0];
    v.arousal = pred.data[1];
    if (v.dims == 3) v.dominance = pred.data[2];
    return v;
}

std::pair<std::vector<RankedExample>, std::vector<RankedExample>> rank_examples(
    const std::vector<std::string>& ids, const std::vector<EmotionVector>& preds,
    const std::vector<EmotionVector>& targets, std::size_t k) {
    check_pair(preds.size(), targets.size(), "rank_examples");
    if (ids.size() != preds.size()) throw ShapeError("rank_examples: ids length differs");
    if (k > preds.size()) throw ContractError("rank_examples: k exceeds example count");

    std::vector<RankedExample> all(preds.size());
    for (std::size_t i = 0; i < preds.size(); ++i) {
        all[i].id = ids[i];
        all[i].pred = preds[i];
        all[i].target = targets[i];
        all[i].rmse = per_image_score(preds[i], targets[i], PerImageScore::root_mean_sq);
    }
    auto by_best = [](const RankedExample& a, const RankedExample& b) {
        return a.rmse != b.rmse ? a.rmse < b.rmse : a.id < b.id;
    };
    auto by_worst = [](const RankedExample& a, const RankedExample& b) {
        return a.rmse != b.rmse ? a.rmse > b.rmse : a.id < b.id;
    };
    std::vector<RankedExample> best = all;
    std::sort(best.begin(), best.end(), by_best);
    best.resize(k);
    std::sort(all.begin(), all.end(), by_worst);
    all.resize(k);
    return {std::move(best), std::move(all)};
}

EvalReport evaluate(const std::string& model_id, const std::vector<EmotionVector>& preds,
                    const std::vector<EmotionVector>& targets,
                    const std::vector<double>& threshold_list, PerImageScore kind) {
    check_pair(preds.size(), targets.size(), "evaluate");
    EvalReport r;
    r.model_id = model_id;
    r.n = preds.size();
    r.dims = targets.front().dims;
    for (int d = 0; d < r.dims; ++d) {
        std::vector<double> y(r.n), yhat(r.n);
        for (std::size_t i = 0; i < r.n; ++i) {
            y[i] = targets[i].component(d);
            yhat[i] = preds[i].component(d);
        }
        DimMetrics m;
        m.rmse = rmse(y, yhat);
        m.mae = mae(y, yhat);
        try {
            m.corr = pearson(y, yhat);
        } catch (const UndefinedCorrelation&) {
            m.corr = std::numeric_limits<double>::quiet_NaN();
        }
        r.per_dim.push_back(m);
    }
    r.thresholds = threshold_list;
    for (double t : threshold_list) r.accuracy_at.push_back(accuracy(preds, targets, t, kind));
    return r;
}

namespace {

constexpr const char* kDimNames[3] = {"valence", "arousal", "dominance"};

std::string fmt(double v) {
    if (std::isnan(v)) return "undefined";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

}  // namespace

std::string report_text(const EvalReport& r) {
    std::string out;
    out += "model: " + r.model_id + "\n";
    out += "n: " + std::to_string(r.n) + "\n";
    out += "dims: " + std::to_string(r.dims) + "\n";
    for (int d = 0; d < r.dims; ++d) {
        const std::string p = kDimNames[d];
        out += p + "_rmse: " + fmt(r.per_dim[d].rmse) + "\n";
        out += p + "_mae: " + fmt(r.per_dim[d].mae) + "\n";
        out += p + "_corr: " + fmt(r.per_dim[d].corr) + "\n";
    }
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
        char key[64];
        std::snprintf(key, sizeof key, "accuracy@%.3g", r.thresholds[i]);
        out += std::string(key) + ": " + fmt(r.accuracy_at[i]) + "\n";
    }
    return out;
}

std::string report_csv(const EvalReport& r) {
    std::string out = "key,value\n";
    out += "model," + r.model_id + "\n";
    out += "n," + std::to_string(r.n) + "\n";
    out += "dims," + std::to_string(r.dims) + "\n";
    for (int d = 0; d < r.dims; ++d) {
        const std::string p = kDimNames[d];
        out += p + "_rmse," + fmt(r.per_dim[d].rmse) + "\n";
        out += p + "_mae," + fmt(r.per_dim[d].mae) + "\n";
        out += p + "_corr," + fmt(r.per_dim[d].corr) + "\n";
    }
    for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
        char key[64];
        std::snprintf(key, sizeof key, "accuracy@%.3g", r.thresholds[i]);
        out += std::string(key) + "," + fmt(r.accuracy_at[i]) + "\n";
    }
    return out;
}

std::vector<double> collapse_feature_map_values(const Tensor& chw, MapMode mode) {
    if (chw.shape.size() != 3)
        throw ShapeError("collapse_feature_map: expected [C,H,W], got " + shape_str(chw.shape));
    const int c = chw.shape[0];
    const std::size_t hw = static_cast<std::size_t>(chw.shape[1]) * chw.shape[2];

    std::vector<double> map(hw, 0.0);
    if (mode == MapMode::avg) {
        for (int ic = 0; ic < c; ++ic)
            for (std::size_t i = 0; i < hw; ++i) map[i] += chw.data[ic * hw + i];
        for (auto& v : map) v /= c;
    } else {
        for (std::size_t i = 0; i < hw; ++i) map[i] = chw.data[i];
        for (int ic = 1; ic < c; ++ic)
            for (std::size_t i = 0; i < hw; ++i)
                map[i] = std::max(map[i], static_cast<double>(chw.data[ic * hw + i]));
    }
    return map;
}

std::vector<std::uint8_t> collapse_feature_map(const Tensor& chw, MapMode mode) {
    const std::vector<double> map = collapse_feature_map_values(chw, mode);
    const std::size_t hw = map.size();

    double lo = map[0], hi = map[0];
    for (double v : map) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<std::uint8_t> out(hw);
    if (hi == lo) {
        // Degenerate constant map: defined as mid-gray.
        std::fill(out.begin(), out.end(), std::uint8_t{128});
    } else {
        for (std::size_t i = 0; i < hw; ++i)
            out[i] = static_cast<std::uint8_t>(std::lround((map[i] - lo) / (hi - lo) * 255.0));
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& gray) {
    if (static_cast<std::size_t>(width) * height != gray.size())
        throw ShapeError("write_pgm: pixel count does not match dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << "P5\n" << width << " " << height << "\n255\n";
    out.write(reinterpret_cast<const char*>(gray.data()), static_cast<std::streamsize>(gray.size()));
}

void feature_map_export(const Model& model, const Tensor& chw, const std::string& layer,
                        MapMode mode, const std::filesystem::path& out_path) {
    const auto& names = model.conv_layer_names();
    if (std::find(names.begin(), names.end(), layer) == names.end()) {
        std::string valid;
        for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
        throw ConfigError("unknown layer '" + layer + "'; valid layers: " + valid);
    }

    GraphT<float> g;
    Model::Bound bound = model.bind(g, false);
    Tensor batch(Shape{1, chw.shape[0], chw.shape[1], chw.shape[2]}, chw.data);
    Rng rng(0);
    std::map<std::string, Tensor> taps;
    model.forward(g, bound, g.constant(std::move(batch)), false, rng, &taps);

    const Tensor& act = taps.at(layer);  // [1,C,H,W]
    Tensor squeezed(Shape{act.shape[1], act.shape[2], act.shape[3]}, act.data);
    const auto gray = collapse_feature_map(squeezed, mode);
    write_pgm(out_path, act.shape[3], act.shape[2], gray);
}

}  // namespace demo
