#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "demo/error.hpp"

namespace demo {

// The eight basic emotions, in the order their vote counts enter the
// weighted mean. Summations over emotions always run in this order so
// results do not depend on input row order.
enum class Emotion : int {
    happiness = 0,
    surprise,
    sadness,
    anger,
    disgust,
    fear,
    contempt,
    neutral,
};

inline constexpr int kEmotionCount = 8;
inline constexpr std::array<const char*, kEmotionCount> kEmotionNames = {
    "happiness", "surprise", "sadness", "anger", "disgust", "fear", "contempt", "neutral"};

// Per-image crowd vote counts. `discarded` pools the unknown and
// not-a-face votes, which never enter the rating.
struct CrowdLabelCounts {
    std::array<int, kEmotionCount> votes{};
    int discarded = 0;

    int emotion_total() const {
        int t = 0;
        for (int v : votes) t += v;
        return t;
    }
    int total() const { return emotion_total() + discarded; }
};

// Per-emotion valence/arousal/dominance means and standard deviations on
// the 1-9 affective-norms scale.
struct NormTable {
    // [emotion][dimension], dimension order: valence, arousal, dominance
    std::array<std::array<double, 3>, kEmotionCount> mean{};
    std::array<std::array<double, 3>, kEmotionCount> sd{};
};

// A point in the 2-D (V,A) or 3-D (V,A,D) emotion space.
struct EmotionVector {
    double valence = 0.0;
    double arousal = 0.0;
    double dominance = 0.0;  // meaningful only when dims == 3
    int dims = 2;

    double component(int d) const { return d == 0 ? valence : (d == 1 ? arousal : dominance); }
};

struct Thresholds {
    double sd_mean = 0.0;  // mean of all 24 per-emotion per-dimension sds
    double t_unit = 0.0;   // 0.5 * sd_mean; one threshold unit
};

// Norms CSV:
//   emotion,valence,arousal,dominance,sd_valence,sd_arousal,sd_dominance
// One row per emotion, names as in kEmotionNames, means in [1,9], sds > 0.
NormTable load_norms(const std::filesystem::path& path);
NormTable parse_norms_csv(const std::string& text, const std::string& origin);
void write_norms_csv(const std::filesystem::path& path, const NormTable& norms);

// Count-weighted mean of the norm means (dimension by dimension).
// Throws FormatError when every emotion count is zero: such an image is
// unratable and must be dropped upstream.
EmotionVector map_labels(const CrowdLabelCounts& counts, const NormTable& norms, int dims);

Thresholds derive_thresholds(const NormTable& norms);

// Uniform bins over [1,9]; a value of exactly 9 lands in the last bin.
// Returns one count vector per dimension present in the vectors.
std::vector<std::vector<int>> rating_histogram(const std::vector<EmotionVector>& vectors, int bins);

}  // namespace demo
