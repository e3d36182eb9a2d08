#include "demo/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "csv_util.hpp"

namespace demo {

namespace {

Usage usage_from(std::string_view s, const std::string& context) {
    const std::string u = csv::lower(csv::trim(s));
    if (u == "training") return Usage::Training;
    if (u == "publictest") return Usage::PublicTest;
    if (u == "privatetest") return Usage::PrivateTest;
    throw FormatError(context + ": unknown Usage '" + std::string(csv::trim(s)) + "'");
}

std::string row_id(std::size_t data_row) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "fer%07zu", data_row);
    return buf;
}

// "fer0000123.png" -> "fer0000123"
std::string strip_extension(std::string_view name) {
    const std::size_t dot = name.rfind('.');
    if (dot != std::string_view::npos) name = name.substr(0, dot);
    return std::string(name);
}

}  // namespace

std::vector<FaceImage> parse_image_csv(const std::filesystem::path& path) {
    const std::string text = csv::read_file(path);
    std::vector<FaceImage> images;
    std::size_t data_row = 0;

    csv::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (lineno == 1) {
            if (csv::lower(line) != "emotion,pixels,usage")
                throw FormatError(path.string() + ": expected header 'emotion,pixels,Usage'");
            return;
        }
        const auto fields = csv::split(line, ',');
        const std::string ctx = path.string() + " line " + std::to_string(lineno);
        if (fields.size() != 3) throw FormatError(ctx + ": expected 3 fields");
        csv::parse_int(fields[0], ctx);  // legacy emotion column, ignored

        FaceImage img;
        img.id = row_id(data_row);
        img.usage = usage_from(fields[2], ctx);
        img.pixels.reserve(kImagePixels);

        std::string_view px = csv::trim(fields[1]);
        std::size_t start = 0;
        while (start < px.size()) {
            std::size_t end = px.find(' ', start);
            if (end == std::string_view::npos) end = px.size();
            if (end > start) {
                const long v = csv::parse_int(px.substr(start, end - start), ctx);
                if (v < 0 || v > 255)
                    throw FormatError(ctx + ": pixel value " + std::to_string(v) +
                                      " outside [0,255]");
                img.pixels.push_back(static_cast<std::uint8_t>(v));
            }
            start = end + 1;
        }
        if (img.pixels.size() != kImagePixels)
            throw FormatError(ctx + ": expected " + std::to_string(kImagePixels) +
                              " pixel values, got " + std::to_string(img.pixels.size()));
        images.push_back(std::move(img));
        ++data_row;
    });
    return images;
}

std::map<std::string, CrowdLabelCounts> parse_crowd_labels(const std::filesystem::path& path) {
    const std::string text = csv::read_file(path);
    std::map<std::string, CrowdLabelCounts> labels;
    std::size_t data_row = 0;

    // Vote columns in file order; maps to the Emotion enum indices.
    // File: neutral,happiness,surprise,sadness,anger,disgust,fear,contempt
    static constexpr int kFileToEmotion[8] = {
        static_cast<int>(Emotion::neutral),  static_cast<int>(Emotion::happiness),
        static_cast<int>(Emotion::surprise), static_cast<int>(Emotion::sadness),
        static_cast<int>(Emotion::anger),    static_cast<int>(Emotion::disgust),
        static_cast<int>(Emotion::fear),     static_cast<int>(Emotion::contempt)};

    csv::for_each_line(text, [&](std::size_t lineno, std::string_view line) {
        if (lineno == 1) {
            auto head = csv::split(line, ',');
            if (head.size() != 12)
                throw FormatError(path.string() + ": expected 12 columns in header");
            // Accept both the canonical 'image' and FERPlus' 'Image name'.
            std::string img_col = csv::lower(csv::trim(head[1]));
            img_col.erase(std::remove(img_col.begin(), img_col.end(), ' '), img_col.end());
            const char* expect[12] = {"usage",   "image", "neutral", "happiness",
                                      "surprise", "sadness", "anger",   "disgust",
                                      "fear",     "contempt", "unknown", "nf"};
            for (int i = 0; i < 12; ++i) {
                std::string got = i == 1 ? img_col : csv::lower(csv::trim(head[i]));
                if (i == 1 && got == "imagename") got = "image";
                if (got != expect[i])
                    throw FormatError(path.string() + ": header column " + std::to_string(i + 1) +
                                      " must be '" + expect[i] + "', got '" + got + "'");
            }
            return;
        }
        const auto fields = csv::split(line, ',');
        const std::string ctx = path.string() + " line " + std::to_string(lineno);
        if (fields.size() != 12) throw FormatError(ctx + ": expected 12 fields");

        std::string id = strip_extension(csv::trim(fields[1]));
        if (id.empty()) id = row_id(data_row);

        CrowdLabelCounts counts;
        for (int i = 0; i < 8; ++i) {
            const long v = csv::parse_int(fields[2 + i], ctx);
            if (v < 0) throw FormatError(ctx + ": negative vote count");
            counts.votes[kFileToEmotion[i]] = static_cast<int>(v);
        }
        const long unknown = csv::parse_int(fields[10], ctx);
        const long nf = csv::parse_int(fields[11], ctx);
        if (unknown < 0 || nf < 0) throw FormatError(ctx + ": negative vote count");
        counts.discarded = static_cast<int>(unknown + nf);

        labels[id] = counts;
        ++data_row;
    });
    return labels;
}

SplitDataset build_dataset(const std::vector<FaceImage>& images,
                           const std::map<std::string, CrowdLabelCounts>& labels,
                           const NormTable& norms, int dims, BuildStats* stats) {
    SplitDataset out;
    BuildStats st;
    st.images_parsed = images.size();
    st.label_rows = labels.size();

    std::size_t matched = 0;
    for (const auto& img : images) {
        const auto it = labels.find(img.id);
        if (it == labels.end()) {
            ++st.unlabeled_images;
            continue;
        }
        ++matched;
        const CrowdLabelCounts& counts = it->second;
        if (counts.emotion_total() == 0) {
            ++st.unratable;
            continue;
        }
        LabeledExample ex;
        ex.image = img;
        ex.counts = counts;
        ex.target = map_labels(counts, norms, dims);
        switch (img.usage) {
            case Usage::Training: out.train.push_back(std::move(ex)); break;
            case Usage::PublicTest: out.val.push_back(std::move(ex)); break;
            case Usage::PrivateTest: out.test.push_back(std::move(ex)); break;
        }
    }
    st.orphan_labels = labels.size() - matched;
    st.retained = out.size();
    if (stats) *stats = st;
    return out;
}

namespace {

// lerp written as a + t*(b-a): exact when a == b, so resizing preserves
// constant images bit-for-bit and 48 -> 48 is an identity.
inline float lerp(float a, float b, float t) { return a + t * (b - a); }

}  // namespace

Tensor preprocess(const FaceImage& image, int target_size, int channels) {
    if (image.pixels.size() != kImagePixels)
        throw ShapeError("preprocess: image must have " + std::to_string(kImagePixels) + " pixels");
    if (target_size < 1) throw ConfigError("preprocess: target_size must be positive");
    if (channels != 1 && channels != 3) throw ConfigError("preprocess: channels must be 1 or 3");

    std::vector<float> gray(kImagePixels);
    for (int i = 0; i < kImagePixels; ++i) gray[i] = static_cast<float>(image.pixels[i]) / 255.0f;

    const int s = target_size;
    std::vector<float> resized(static_cast<std::size_t>(s) * s);
    const float scale = static_cast<float>(kImageSide) / static_cast<float>(s);
    for (int oy = 0; oy < s; ++oy) {
        float sy = (oy + 0.5f) * scale - 0.5f;
        if (sy < 0) sy = 0;
        int y0 = static_cast<int>(sy);
        if (y0 > kImageSide - 1) y0 = kImageSide - 1;
        const int y1 = std::min(y0 + 1, kImageSide - 1);
        const float ty = sy - static_cast<float>(y0);
        for (int ox = 0; ox < s; ++ox) {
            float sx = (ox + 0.5f) * scale - 0.5f;
            if (sx < 0) sx = 0;
            int x0 = static_cast<int>(sx);
            if (x0 > kImageSide - 1) x0 = kImageSide - 1;
            const int x1 = std::min(x0 + 1, kImageSide - 1);
            const float tx = sx - static_cast<float>(x0);
            const float top = lerp(gray[y0 * kImageSide + x0], gray[y0 * kImageSide + x1], tx);
            const float bot = lerp(gray[y1 * kImageSide + x0], gray[y1 * kImageSide + x1], tx);
            resized[static_cast<std::size_t>(oy) * s + ox] = lerp(top, bot, ty);
        }
    }

    Tensor out(Shape{channels, s, s});
    for (int c = 0; c < channels; ++c)
        std::copy(resized.begin(), resized.end(),
                  out.data.begin() + static_cast<std::size_t>(c) * s * s);
    return out;
}

Tensor mirror_horizontal(const Tensor& chw) {
    if (chw.shape.size() != 3)
        throw ShapeError("mirror_horizontal: expected [C,H,W], got " + shape_str(chw.shape));
    const int c = chw.shape[0], h = chw.shape[1], w = chw.shape[2];
    Tensor out(chw.shape);
    for (int ic = 0; ic < c; ++ic)
        for (int iy = 0; iy < h; ++iy) {
            const std::size_t row = (static_cast<std::size_t>(ic) * h + iy) * w;
            for (int ix = 0; ix < w; ++ix) out.data[row + ix] = chw.data[row + (w - 1 - ix)];
        }
    return out;
}

Tensor augment_flip(const Tensor& chw, Rng& rng) {
    return rng.uniform() < 0.5 ? mirror_horizontal(chw) : chw;
}

std::vector<std::vector<std::size_t>> batch_indices(std::size_t n, int batch_size, Rng& rng,
                                                    bool shuffle) {
    if (batch_size < 1) throw ConfigError("batch_indices: batch_size must be >= 1");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (shuffle) rng.shuffle(order);

    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + start, order.begin() + end);
    }
    return batches;
}

std::pair<Tensor, Tensor> make_batch(const std::vector<Tensor>& inputs,
                                     const std::vector<const EmotionVector*>& targets, int dims) {
    if (inputs.empty() || inputs.size() != targets.size())
        throw ShapeError("make_batch: inputs and targets must be non-empty and equal-length");
    const Shape& chw = inputs.front().shape;
    const int b = static_cast<int>(inputs.size());

    Tensor x(Shape{b, chw[0], chw[1], chw[2]});
    Tensor y(Shape{b, dims});
    const std::size_t per = inputs.front().data.size();
    for (int i = 0; i < b; ++i) {
        if (inputs[i].shape != chw) throw ShapeError("make_batch: mixed input shapes");
        std::copy(inputs[i].data.begin(), inputs[i].data.end(), x.data.begin() + i * per);
        for (int d = 0; d < dims; ++d)
            y.data[static_cast<std::size_t>(i) * dims + d] =
                static_cast<float>(targets[i]->component(d));
    }
    return {std::move(x), std::move(y)};
}

}  // namespace demo
