#include "demo/trajectory.hpp"

#include <cstdio>
#include <fstream>

#include "csv_util.hpp"
#include "demo/evaluator.hpp"

namespace demo {

std::vector<FaceImage> parse_frames_csv(const std::filesystem::path& path) {
    const std::string text = csv::read_file(path);
    std::vector<FaceImage> frames;

    csv::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (lineno == 1) {
            if (csv::lower(line) != "pixels")
                throw FormatError(path.string() + ": expected header 'pixels'");
            return;
        }
        const std::size_t frame_index = frames.size();
        const std::string ctx = path.string() + " frame " + std::to_string(frame_index);

        FaceImage img;
        char buf[16];
        std::snprintf(buf, sizeof buf, "frame%06zu", frame_index);
        img.id = buf;
        img.pixels.reserve(kImagePixels);

        std::size_t start = 0;
        while (start < line.size()) {
            std::size_t end = line.find(' ', start);
            if (end == std::string_view::npos) end = line.size();
            if (end > start) {
                const long v = csv::parse_int(line.substr(start, end - start), ctx);
                if (v < 0 || v > 255)
                    throw FormatError(ctx + ": pixel value " + std::to_string(v) + " outside [0,255]");
                img.pixels.push_back(static_cast<std::uint8_t>(v));
            }
            start = end + 1;
        }
        if (img.pixels.size() != kImagePixels)
            throw FormatError(ctx + ": expected " + std::to_string(kImagePixels) +
                              " pixel values, got " + std::to_string(img.pixels.size()));
        frames.push_back(std::move(img));
    });
    return frames;
}

std::vector<EmotionVector> trajectory_predictions(const Model& model,
                                                  const std::vector<FaceImage>& frames) {
    std::vector<EmotionVector> out;
    out.reserve(frames.size());
    const auto& cfg = model.config();
    for (const auto& frame : frames)
        out.push_back(predict_flip_avg(model, preprocess(frame, cfg.input_size, cfg.input_channels)));
    return out;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<EmotionVector>& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const int dims = points.empty() ? 2 : points.front().dims;
    out << "frame,valence,arousal" << (dims == 3 ? ",dominance" : "") << "\n";
    char buf[160];
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (dims == 3)
            std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", i, points[i].valence,
                          points[i].arousal, points[i].dominance);
        else
            std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", i, points[i].valence,
                          points[i].arousal);
        out << buf;
    }
}

void write_trajectory_svg(const std::filesystem::path& path,
                          const std::vector<EmotionVector>& points) {
    constexpr double kSize = 640.0, kMargin = 48.0;
    const double span = kSize - 2 * kMargin;
    // Valence left-to-right, arousal bottom-to-top, both on the 1-9 scale.
    auto sx = [&](double v) { return kMargin + (v - 1.0) / 8.0 * span; };
    auto sy = [&](double a) { return kSize - kMargin - (a - 1.0) / 8.0 * span; };

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[256];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
           "viewBox=\"0 0 640 640\">\n";
    std::snprintf(buf, sizeof buf,
                  "  <rect x=\"%.0f\" y=\"%.0f\" width=\"%.0f\" height=\"%.0f\" fill=\"white\" "
                  "stroke=\"black\"/>\n",
                  kMargin, kMargin, span, span);
    out << buf;
    out << "  <text x=\"320\" y=\"628\" text-anchor=\"middle\" font-size=\"16\">valence</text>\n";
    out << "  <text x=\"16\" y=\"320\" text-anchor=\"middle\" font-size=\"16\" "
           "transform=\"rotate(-90 16 320)\">arousal</text>\n";
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        std::snprintf(buf, sizeof buf,
                      "  <line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                      "stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
                      sx(points[i].valence), sy(points[i].arousal), sx(points[i + 1].valence),
                      sy(points[i + 1].arousal));
        out << buf;
    }
    for (const auto& p : points) {
        std::snprintf(buf, sizeof buf,
                      "  <circle cx=\"%.2f\" cy=\"%.2f\" r=\"4\" fill=\"crimson\"/>\n",
                      sx(p.valence), sy(p.arousal));
        out << buf;
    }
    out << "</svg>\n";
}

}  // namespace demo
