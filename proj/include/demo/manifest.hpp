#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace demo {

inline constexpr const char* kToolVersion = "0.1.0";

// Provenance record written alongside every CLI run's outputs. Timestamps
// are confined to the manifest so all other outputs stay byte-reproducible.
struct RunManifest {
    std::string subcommand;
    std::string config_json;  // resolved configuration, serialized
    std::vector<std::pair<std::string, std::string>> input_digests;  // path -> fnv1a64 hex
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;
};

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::string digest_file(const std::filesystem::path& path);

void write_manifest(const RunManifest& m, const std::filesystem::path& path);

}  // namespace demo
