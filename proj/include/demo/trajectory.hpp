#pragma once

#include <filesystem>
#include <vector>

#include "demo/dataset.hpp"
#include "demo/model.hpp"

namespace demo {

// Frames CSV: header `pixels`, one row of 2304 space-separated intensities
// per pre-cropped frame, in playback order.
std::vector<FaceImage> parse_frames_csv(const std::filesystem::path& path);

// Per-frame flip-averaged predictions, in frame order.
std::vector<EmotionVector> trajectory_predictions(const Model& model,
                                                  const std::vector<FaceImage>& frames);

// Scatter of the valence-arousal plane with the frame path drawn as
// individual segments: exactly N <circle> and N-1 <line> elements.
void write_trajectory_svg(const std::filesystem::path& path,
                          const std::vector<EmotionVector>& points);

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<EmotionVector>& points);

}  // namespace demo
