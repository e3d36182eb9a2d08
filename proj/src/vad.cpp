#include "demo/vad.hpp"

#include <array>
#include <cstdio>
#include <fstream>

#include "csv_util.hpp"

namespace demo {

namespace {

constexpr const char* kNormsHeader =
    "emotion,valence,arousal,dominance,sd_valence,sd_arousal,sd_dominance";

int emotion_index(std::string_view name) {
    for (int i = 0; i < kEmotionCount; ++i)
        if (name == kEmotionNames[i]) return i;
    return -1;
}

}  // namespace

NormTable parse_norms_csv(const std::string& text, const std::string& origin) {
    NormTable table;
    std::array<bool, kEmotionCount> seen{};
    bool header_ok = false;

    csv::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (lineno == 1) {
            if (csv::lower(line) != kNormsHeader)
                throw FormatError(origin + ": expected header '" + kNormsHeader + "'");
            header_ok = true;
            return;
        }
        const auto fields = csv::split(line, ',');
        if (fields.size() != 7)
            throw FormatError(origin + " line " + std::to_string(lineno) + ": expected 7 fields");
        const std::string name = csv::lower(csv::trim(fields[0]));
        const int e = emotion_index(name);
        if (e < 0)
            throw FormatError(origin + " line " + std::to_string(lineno) + ": unknown emotion '" +
                              name + "'");
        if (seen[e]) throw FormatError(origin + ": duplicate row for '" + name + "'");
        seen[e] = true;
        const std::string ctx = origin + " row '" + name + "'";
        for (int d = 0; d < 3; ++d) {
            const double m = csv::parse_double(fields[1 + d], ctx);
            if (m < 1.0 || m > 9.0)
                throw FormatError(ctx + ": mean " + std::to_string(m) + " outside [1,9]");
            table.mean[e][d] = m;
        }
        for (int d = 0; d < 3; ++d) {
            const double s = csv::parse_double(fields[4 + d], ctx);
            if (s <= 0.0) throw FormatError(ctx + ": standard deviation must be positive");
            table.sd[e][d] = s;
        }
    });

    if (!header_ok) throw FormatError(origin + ": empty norms file");
    for (int e = 0; e < kEmotionCount; ++e)
        if (!seen[e])
            throw FormatError(origin + ": missing row for '" + std::string(kEmotionNames[e]) + "'");
    return table;
}

NormTable load_norms(const std::filesystem::path& path) {
    return parse_norms_csv(csv::read_file(path), path.string());
}

void write_norms_csv(const std::filesystem::path& path, const NormTable& norms) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kNormsHeader << "\n";
    char buf[256];
    for (int e = 0; e < kEmotionCount; ++e) {
        std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n",
                      kEmotionNames[e], norms.mean[e][0], norms.mean[e][1], norms.mean[e][2],
                      norms.sd[e][0], norms.sd[e][1], norms.sd[e][2]);
        out << buf;
    }
}

EmotionVector map_labels(const CrowdLabelCounts& counts, const NormTable& norms, int dims) {
    if (dims != 2 && dims != 3) throw ConfigError("map_labels: dims must be 2 or 3");
    for (int v : counts.votes)
        if (v < 0) throw FormatError("map_labels: negative vote count");
    const int total = counts.emotion_total();
    if (total == 0)
        throw FormatError("map_labels: all emotion counts are zero (unratable image)");

    EmotionVector out;
    out.dims = dims;
    for (int d = 0; d < dims; ++d) {
        double num = 0.0;
        for (int e = 0; e < kEmotionCount; ++e) num += counts.votes[e] * norms.mean[e][d];
        const double r = num / total;
        if (d == 0)
            out.valence = r;
        else if (d == 1)
            out.arousal = r;
        else
            out.dominance = r;
    }
    return out;
}

Thresholds derive_thresholds(const NormTable& norms) {
    double acc = 0.0;
    for (int e = 0; e < kEmotionCount; ++e)
        for (int d = 0; d < 3; ++d) acc += norms.sd[e][d];
    Thresholds t;
    t.sd_mean = acc / (kEmotionCount * 3);
    t.t_unit = 0.5 * t.sd_mean;
    return t;
}

std::vector<std::vector<int>> rating_histogram(const std::vector<EmotionVector>& vectors,
                                               int bins) {
    if (bins < 1) throw ConfigError("rating_histogram: bins must be >= 1");
    const int dims = vectors.empty() ? 2 : vectors.front().dims;
    std::vector<std::vector<int>> counts(dims, std::vector<int>(bins, 0));
    for (const auto& v : vectors) {
        for (int d = 0; d < dims; ++d) {
            const double x = v.component(d);
            int b = static_cast<int>((x - 1.0) / 8.0 * bins);
            if (b < 0) b = 0;
            if (b >= bins) b = bins - 1;  // value exactly 9 lands in the last bin
            ++counts[d][b];
        }
    }
    return counts;
}

}  // namespace demo
