#include "demo/synth.hpp"

#include <cstdio>
#include <fstream>

#include "demo/vad.hpp"

namespace demo {

NormTable synth_norms() {
    // Fixed plausible table on the 1-9 scale; the happiness row carries the
    // published anchor values.
    NormTable t;
    const double mean[kEmotionCount][3] = {
        {8.21, 6.49, 6.63},  // happiness
        {7.02, 7.55, 5.42},  // surprise
        {2.21, 3.49, 3.04},  // sadness
        {2.53, 7.12, 6.03},  // anger
        {2.74, 5.43, 5.01},  // disgust
        {2.85, 6.81, 3.23},  // fear
        {3.22, 5.17, 5.82},  // contempt
        {5.02, 3.91, 5.24},  // neutral
    };
    const double sd[kEmotionCount][3] = {
        {1.82, 2.23, 2.01}, {1.91, 1.76, 2.21}, {1.72, 2.42, 2.06}, {2.04, 2.11, 2.32},
        {1.93, 2.27, 2.12}, {1.88, 2.06, 2.24}, {2.10, 1.97, 2.08}, {1.74, 1.89, 1.95},
    };
    for (int e = 0; e < kEmotionCount; ++e)
        for (int d = 0; d < 3; ++d) {
            t.mean[e][d] = mean[e][d];
            t.sd[e][d] = sd[e][d];
        }
    return t;
}

SynthPaths write_synth_dataset(const std::filesystem::path& dir, int n, std::uint64_t seed) {
    if (n < 1) throw ConfigError("synth: n must be >= 1");
    std::filesystem::create_directories(dir);
    SynthPaths paths{dir / "images.csv", dir / "labels.csv", dir / "norms.csv"};

    Rng rng(seed);

    std::ofstream images(paths.images, std::ios::binary);
    if (!images) throw IoError("cannot write " + paths.images.string());
    std::ofstream labels(paths.labels, std::ios::binary);
    if (!labels) throw IoError("cannot write " + paths.labels.string());

    images << "emotion,pixels,Usage\n";
    labels << "usage,image,neutral,happiness,surprise,sadness,anger,disgust,fear,contempt,unknown,NF\n";

    // Label-file vote column order -> Emotion enum index.
    constexpr int kColumnToEmotion[8] = {
        static_cast<int>(Emotion::neutral),  static_cast<int>(Emotion::happiness),
        static_cast<int>(Emotion::surprise), static_cast<int>(Emotion::sadness),
        static_cast<int>(Emotion::anger),    static_cast<int>(Emotion::disgust),
        static_cast<int>(Emotion::fear),     static_cast<int>(Emotion::contempt)};

    for (int i = 0; i < n; ++i) {
        const char* usage = (i % 10 == 8) ? "PublicTest" : (i % 10 == 9) ? "PrivateTest" : "Training";

        // Per-pixel texture keeps the images maximally distinct at conv
        // scale, which is what the memorization tests need.
        std::string px;
        px.reserve(kImagePixels * 4);
        for (int p = 0; p < kImagePixels; ++p) {
            if (p) px.push_back(' ');
            px += std::to_string(rng.below(256));
        }
        images << "0," << px << "," << usage << "\n";

        // 10 votes: a dominant emotion plus a few spread across the rest.
        std::array<int, kEmotionCount> votes{};
        const int dominant = static_cast<int>(rng.below(kEmotionCount));
        const int spread = static_cast<int>(rng.below(4));  // 0..3 stray votes
        votes[dominant] = 10 - spread;
        for (int s = 0; s < spread; ++s) votes[rng.below(kEmotionCount)] += 1;

        char id[16];
        std::snprintf(id, sizeof id, "fer%07d", i);
        labels << usage << "," << id << ".png";
        for (int col = 0; col < 8; ++col) labels << "," << votes[kColumnToEmotion[col]];
        labels << ",0,0\n";
    }

    write_norms_csv(paths.norms, synth_norms());
    return paths;
}

}  // namespace demo
