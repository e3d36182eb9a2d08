#include "demo/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "demo/error.hpp"

namespace demo {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string digest_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
        if (!in) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["tool_version"] = kToolVersion;
    j["subcommand"] = m.subcommand;
    try {
        j["config"] = nlohmann::json::parse(m.config_json);
    } catch (const nlohmann::json::exception&) {
        j["config"] = m.config_json;
    }
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [file, digest] : m.input_digests) inputs[file] = digest;
    j["inputs"] = inputs;
    j["seed"] = m.seed;
    j["outputs"] = m.outputs;
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace demo
