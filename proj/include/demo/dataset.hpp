#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "demo/rng.hpp"
#include "demo/tensor.hpp"
#include "demo/vad.hpp"

namespace demo {

enum class Usage { Training, PublicTest, PrivateTest };

inline constexpr int kImageSide = 48;
inline constexpr int kImagePixels = kImageSide * kImageSide;

struct FaceImage {
    std::string id;                     // "fer0000123", aligned with the label file naming
    std::vector<std::uint8_t> pixels;   // exactly 2304 grayscale intensities
    Usage usage = Usage::Training;
};

struct LabeledExample {
    FaceImage image;
    CrowdLabelCounts counts;
    EmotionVector target;
};

struct SplitDataset {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> val;
    std::vector<LabeledExample> test;

    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

struct BuildStats {
    std::size_t images_parsed = 0;
    std::size_t label_rows = 0;
    std::size_t unlabeled_images = 0;   // parsed image without a label row
    std::size_t unratable = 0;          // labeled but every emotion count zero
    std::size_t orphan_labels = 0;      // label row without a matching image
    std::size_t retained = 0;
};

// Image CSV: header `emotion,pixels,Usage`; pixels are 2304 space-separated
// integers in [0,255]. The emotion column is parsed but ignored (crowd
// labels supersede it). Row ids are synthesized as fer%07d from the 0-based
// data row index, matching the FERPlus image naming.
std::vector<FaceImage> parse_image_csv(const std::filesystem::path& path);

// Crowd-label CSV: header
//   usage,image,neutral,happiness,surprise,sadness,anger,disgust,fear,contempt,unknown,NF
// ("Image name" is accepted for the image column). unknown+NF accumulate
// into `discarded`. Empty image names fall back to the fer%07d row id.
std::map<std::string, CrowdLabelCounts> parse_crowd_labels(const std::filesystem::path& path);

// Joins images with label rows, drops unratable images (all eight emotion
// counts zero) and unlabeled ones, maps targets through Eq-style weighting,
// and splits by Usage (Training/PublicTest/PrivateTest -> train/val/test).
SplitDataset build_dataset(const std::vector<FaceImage>& images,
                           const std::map<std::string, CrowdLabelCounts>& labels,
                           const NormTable& norms, int dims, BuildStats* stats = nullptr);

// Scales intensities to [0,1], bilinearly resizes 48 -> target_size and
// replicates the plane when channels == 3. Output shape [channels, s, s].
// Exact on constant images and an exact identity at target_size == 48.
Tensor preprocess(const FaceImage& image, int target_size, int channels);

// Deterministic horizontal mirror of a [C,H,W] tensor (an involution).
Tensor mirror_horizontal(const Tensor& chw);

// Mirrors with probability 0.5 drawn from rng.
Tensor augment_flip(const Tensor& chw, Rng& rng);

// Index batches for one epoch: every example exactly once, final partial
// batch included, order fixed by the rng state when shuffling.
std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, int batch_size, Rng& rng,
                                                    bool shuffle);

// Assembles (inputs [B,C,S,S], targets [B,dims]) from preprocessed example
// tensors and their targets.
std::pair<Tensor, Tensor> make_batch(const std::vector<Tensor>& inputs,
                                     const std::vector<const EmotionVector*>& targets, int dims);

}  // namespace demo
