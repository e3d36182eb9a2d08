#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demo/dataset.hpp"
#include "demo/model.hpp"
#include "demo/vad.hpp"

namespace demo {

// Scalar regression metrics over paired sequences.
double rmse(std::span<const double> y, std::span<const double> yhat);
double mae(std::span<const double> y, std::span<const double> yhat);
// Throws UndefinedCorrelation when either sequence is constant.
double pearson(std::span<const double> y, std::span<const double> yhat);

// Two readings of the per-image error that the threshold compares against:
// the mean over dimensions of |error| (default) or the root of the mean
// squared per-dimension error.
enum class PerImageScore { mean_abs, root_mean_sq };

double per_image_score(const EmotionVector& pred, const EmotionVector& target, PerImageScore kind);

// Fraction of images whose per-image score is strictly below T.
double accuracy(const std::vector<EmotionVector>& preds, const std::vector<EmotionVector>& targets,
                double threshold, PerImageScore kind = PerImageScore::mean_abs);

struct SweepCurve {
    std::vector<double> thresholds;
    std::vector<double> acc;

    // Smallest grid threshold whose accuracy reaches ref_acc, if any.
    std::optional<double> smallest_threshold(double ref_acc) const;
};

std::vector<double> uniform_grid(double lo, double hi, int points);

SweepCurve threshold_sweep(const std::vector<EmotionVector>& preds,
                           const std::vector<EmotionVector>& targets,
                           const std::vector<double>& grid,
                           PerImageScore kind = PerImageScore::mean_abs);

// (forward(x) + forward(mirror(x))) / 2 for a single [C,H,W] image.
EmotionVector predict_flip_avg(const Model& model, const Tensor& chw);

Tensor flip_avg_predictions(const Model& model, const Tensor& batch);

struct RankedExample {
    std::string id;
    double rmse = 0.0;  // per-image RMSE over the D dimensions
    EmotionVector pred;
    EmotionVector target;
};

// Top-k best (smallest per-image RMSE) and worst (largest); ties broken by
// ascending image id within each list.
std::pair<std::vector<RankedExample>, std::vector<RankedExample>> rank_examples(
    const std::vector<std::string>& ids, const std::vector<EmotionVector>& preds,
    const std::vector<EmotionVector>& targets, std::size_t k);

struct DimMetrics {
    double rmse = 0.0;
    double mae = 0.0;
    double corr = 0.0;
};

struct EvalReport {
    std::string model_id;
    int dims = 2;
    std::size_t n = 0;
    std::vector<DimMetrics> per_dim;       // size dims, order V,A[,D]
    std::vector<double> thresholds;
    std::vector<double> accuracy_at;       // aligned with thresholds
};

EvalReport evaluate(const std::string& model_id, const std::vector<EmotionVector>& preds,
                    const std::vector<EmotionVector>& targets,
                    const std::vector<double>& threshold_list,
                    PerImageScore kind = PerImageScore::mean_abs);

std::string report_text(const EvalReport& r);
std::string report_csv(const EvalReport& r);

// Channel collapse for feature-map visualization.
enum class MapMode { avg, max };

// Per-pixel channel mean or max of a [C,H,W] activation, before normalization.
std::vector<double> collapse_feature_map_values(const Tensor& chw, MapMode mode);

// Collapses a [C,H,W] activation by channel mean or max and min-max
// normalizes to [0,255]; a constant map yields mid-gray 128.
std::vector<std::uint8_t> collapse_feature_map(const Tensor& chw, MapMode mode);

// 8-bit binary PGM (P5).
void write_pgm(const std::filesystem::path& path, int width, int height,
               const std::vector<std::uint8_t>& gray);

// Runs the model on one image, taps `layer`, collapses and writes a PGM.
// Unknown layer names raise an error listing the valid layers.
void feature_map_export(const Model& model, const Tensor& chw, const std::string& layer,
                        MapMode mode, const std::filesystem::path& out_path);

}  // namespace demo
