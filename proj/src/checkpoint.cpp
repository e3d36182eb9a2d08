#include "demo/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace demo {

namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'D', 'E', 'M', 'O'};
constexpr std::uint8_t kVersion = 1;

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

std::uint64_t get_u64(const std::string& s, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
    return v;
}

float get_f32(const std::string& s, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(s[at + i])) << (8 * i);
    return std::bit_cast<float>(v);
}

json config_to_json(const ModelConfig& cfg) {
    json j;
    j["backbone"] = backbone_name(cfg.backbone);
    j["stage_widths"] = cfg.stage_widths;
    j["head"] = head_name(cfg.head);
    j["bilinear"] = {{"reduce_channels", cfg.bilinear.reduce_channels},
                     {"dropout_rate", cfg.bilinear.dropout_rate},
                     {"post_fc_dim", cfg.bilinear.post_fc_dim},
                     {"signed_sqrt", cfg.bilinear.signed_sqrt}};
    j["output_dims"] = cfg.output_dims;
    j["input_size"] = cfg.input_size;
    j["input_channels"] = cfg.input_channels;
    j["seed"] = cfg.seed;
    return j;
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    try {
        if (j.contains("backbone")) cfg.backbone = backbone_from_name(j.at("backbone").get<std::string>());
        if (j.contains("stage_widths")) cfg.stage_widths = j.at("stage_widths").get<std::vector<int>>();
        if (j.contains("head")) cfg.head = head_from_name(j.at("head").get<std::string>());
        if (j.contains("bilinear")) {
            const json& b = j.at("bilinear");
            if (b.contains("reduce_channels")) cfg.bilinear.reduce_channels = b.at("reduce_channels").get<int>();
            if (b.contains("dropout_rate")) cfg.bilinear.dropout_rate = b.at("dropout_rate").get<double>();
            if (b.contains("post_fc_dim")) cfg.bilinear.post_fc_dim = b.at("post_fc_dim").get<int>();
            if (b.contains("signed_sqrt")) cfg.bilinear.signed_sqrt = b.at("signed_sqrt").get<bool>();
        }
        if (j.contains("output_dims")) cfg.output_dims = j.at("output_dims").get<int>();
        if (j.contains("input_size")) cfg.input_size = j.at("input_size").get<int>();
        if (j.contains("input_channels")) cfg.input_channels = j.at("input_channels").get<int>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace

std::string config_to_json_string(const ModelConfig& cfg) { return config_to_json(cfg).dump(); }

ModelConfig config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model config: invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

void save_checkpoint(const Model& model, const TrainMeta& meta, const std::filesystem::path& path) {
    json header;
    header["config"] = config_to_json(model.config());
    header["meta"] = {{"epoch", meta.epoch}, {"lr", meta.lr}, {"loss_history", meta.loss_history}};
    json params = json::array();
    for (const auto& p : model.params()) params.push_back({{"name", p.name}, {"shape", p.tensor.shape}});
    header["params"] = params;
    const std::string header_text = header.dump();

    std::string blob;
    blob.reserve(13 + header_text.size() + model.param_count() * 4);
    blob.append(kMagic, 4);
    blob.push_back(static_cast<char>(kVersion));
    put_u64(blob, header_text.size());
    blob += header_text;
    for (const auto& p : model.params())
        for (float f : p.tensor.data) put_f32(blob, f);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("short write to " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path, TrainMeta* meta) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const std::string name = path.string();
    if (blob.size() < 13) throw FormatError(name + ": truncated checkpoint");
    if (std::string_view(blob.data(), 4) != std::string_view(kMagic, 4))
        throw FormatError(name + ": not a checkpoint (bad magic)");
    if (static_cast<std::uint8_t>(blob[4]) != kVersion)
        throw FormatError(name + ": unsupported checkpoint version " +
                          std::to_string(static_cast<unsigned>(static_cast<std::uint8_t>(blob[4]))));
    const std::uint64_t header_len = get_u64(blob, 5);
    if (13 + header_len > blob.size()) throw FormatError(name + ": truncated header");

    json header;
    try {
        header = json::parse(blob.substr(13, header_len));
    } catch (const json::exception& e) {
        throw FormatError(name + ": invalid header JSON: " + e.what());
    }

    ModelConfig cfg;
    try {
        cfg = config_from_json(header.at("config"));
    } catch (const json::exception& e) {
        throw FormatError(name + ": missing config: " + e.what());
    }
    Model model = Model::build(cfg);

    try {
        const json& params = header.at("params");
        if (params.size() != model.params().size())
            throw FormatError(name + ": header lists " + std::to_string(params.size()) +
                              " parameters, config generates " +
                              std::to_string(model.params().size()));
        for (std::size_t i = 0; i < model.params().size(); ++i) {
            const auto& p = model.params()[i];
            const std::string pname = params[i].at("name").get<std::string>();
            const Shape pshape = params[i].at("shape").get<Shape>();
            if (pname != p.name || pshape != p.tensor.shape)
                throw FormatError(name + ": parameter '" + p.name + "': expected shape " +
                                  shape_str(p.tensor.shape) + ", file has '" + pname + "' " +
                                  shape_str(pshape));
        }
    } catch (const json::exception& e) {
        throw FormatError(name + ": malformed parameter list: " + e.what());
    }

    std::size_t at = 13 + header_len;
    for (auto& p : model.params()) {
        const std::size_t bytes = p.tensor.data.size() * 4;
        if (at + bytes > blob.size())
            throw FormatError(name + ": truncated payload at parameter '" + p.name + "'");
        for (std::size_t i = 0; i < p.tensor.data.size(); ++i)
            p.tensor.data[i] = get_f32(blob, at + i * 4);
        at += bytes;
    }
    if (at != blob.size()) throw FormatError(name + ": trailing bytes after payload");

    if (meta) {
        TrainMeta m;
        try {
            const json& jm = header.at("meta");
            m.epoch = jm.value("epoch", 0);
            m.lr = jm.value("lr", 0.0);
            if (jm.contains("loss_history"))
                m.loss_history = jm.at("loss_history").get<std::vector<double>>();
        } catch (const json::exception& e) {
            throw FormatError(name + ": malformed meta: " + e.what());
        }
        *meta = std::move(m);
    }
    return model;
}

}  // namespace demo
