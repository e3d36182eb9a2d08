#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demo/model.hpp"

namespace demo {

struct TrainMeta {
    int epoch = 0;
    double lr = 0.0;
    std::vector<double> loss_history;
};

// Checkpoint binary layout, little-endian throughout:
//   bytes 0..3   magic "DEMO"
//   byte  4      format version (1)
//   bytes 5..12  u64 header length
//   header       UTF-8 JSON: config, parameter name/shape list, train meta
//   payload      raw float32 parameter data in config-declaration order
// Round trips are byte-exact; loading validates every parameter name and
// shape against the config and names the first mismatch.
void save_checkpoint(const Model& model, const TrainMeta& meta, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path, TrainMeta* meta = nullptr);

std::string config_to_json_string(const ModelConfig& cfg);
ModelConfig config_from_json_string(const std::string& text);

}  // namespace demo
