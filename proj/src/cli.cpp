#include "demo/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "demo/checkpoint.hpp"
#include "demo/dataset.hpp"
#include "demo/evaluator.hpp"
#include "demo/manifest.hpp"
#include "demo/synth.hpp"
#include "demo/trainer.hpp"
#include "demo/trajectory.hpp"
#include "demo/vad.hpp"

namespace demo::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kNormsEnv = "DEMO_NORMS";

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

fs::path resolve_norms(const std::string& flag_value, const fs::path& fallback) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv(kNormsEnv); env && *env) return env;
    if (!fallback.empty()) return fallback;
    throw ConfigError(std::string("no norms file: pass --norms or set ") + kNormsEnv);
}

void require_file(const fs::path& p) {
    if (!fs::exists(p)) throw IoError("missing input file: " + p.string());
}

struct SweepSpec {
    double lo = 0.0, hi = 2.0;
    int points = 101;
};

SweepSpec parse_sweep(const std::string& s) {
    SweepSpec spec;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d", &spec.lo, &spec.hi, &spec.points) != 3 ||
        spec.points < 2 || spec.hi <= spec.lo)
        throw ConfigError("bad --sweep '" + s + "', expected lo:hi:points, e.g. 0:2:101");
    return spec;
}

TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    cfg.a = j.value("a", cfg.a);
    cfg.lr0 = j.value("lr0", cfg.lr0);
    cfg.momentum = j.value("momentum", cfg.momentum);
    cfg.max_epochs = j.value("max_epochs", cfg.max_epochs);
    cfg.lr_halve_every = j.value("lr_halve_every", cfg.lr_halve_every);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.augment_flip = j.value("augment_flip", cfg.augment_flip);
    cfg.validate();
    return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
    return json{{"a", cfg.a},
                {"lr0", cfg.lr0},
                {"momentum", cfg.momentum},
                {"max_epochs", cfg.max_epochs},
                {"lr_halve_every", cfg.lr_halve_every},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"augment_flip", cfg.augment_flip}};
}

SplitDataset load_dataset(const fs::path& images_path, const fs::path& labels_path,
                          const fs::path& norms_path, int dims, BuildStats* stats = nullptr) {
    require_file(images_path);
    require_file(labels_path);
    require_file(norms_path);
    const auto images = parse_image_csv(images_path);
    const auto labels = parse_crowd_labels(labels_path);
    const auto norms = load_norms(norms_path);
    return build_dataset(images, labels, norms, dims, stats);
}

// ---- synth -----------------------------------------------------------

int cmd_synth(int n, std::uint64_t seed, const fs::path& out_dir) {
    const SynthPaths paths = write_synth_dataset(out_dir, n, seed);

    RunManifest m;
    m.subcommand = "synth";
    m.config_json = json{{"n", n}, {"seed", seed}}.dump();
    m.seed = seed;
    m.outputs = {paths.images.string(), paths.labels.string(), paths.norms.string()};
    write_manifest(m, out_dir / "manifest.json");
    std::cout << "wrote " << n << " synthetic examples to " << out_dir.string() << "\n";
    return 0;
}

// ---- map-labels ------------------------------------------------------

int cmd_map_labels(const fs::path& images_path, const fs::path& labels_path,
                   const fs::path& norms_path, int dims, int bins, const fs::path& out_dir) {
    require_file(images_path);
    require_file(labels_path);
    require_file(norms_path);
    const auto images = parse_image_csv(images_path);
    const auto labels = parse_crowd_labels(labels_path);
    const auto norms = load_norms(norms_path);

    fs::create_directories(out_dir);
    const fs::path targets_path = out_dir / "targets.csv";
    const fs::path hist_path = out_dir / "histogram.csv";

    std::vector<EmotionVector> vectors;
    {
        std::ofstream out(targets_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + targets_path.string());
        out << "image,valence,arousal" << (dims == 3 ? ",dominance" : "") << "\n";
        for (const auto& img : images) {
            const auto it = labels.find(img.id);
            if (it == labels.end() || it->second.emotion_total() == 0) continue;
            const EmotionVector v = map_labels(it->second, norms, dims);
            vectors.push_back(v);
            out << img.id << "," << fmt6(v.valence) << "," << fmt6(v.arousal);
            if (dims == 3) out << "," << fmt6(v.dominance);
            out << "\n";
        }
    }
    {
        const auto hist = rating_histogram(vectors, bins);
        std::ofstream out(hist_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + hist_path.string());
        out << "bin,lo,hi,valence,arousal" << (dims == 3 ? ",dominance" : "") << "\n";
        for (int b = 0; b < bins; ++b) {
            const double lo = 1.0 + 8.0 * b / bins;
            const double hi = 1.0 + 8.0 * (b + 1) / bins;
            out << b << "," << fmt6(lo) << "," << fmt6(hi) << "," << hist[0][b] << ","
                << hist[1][b];
            if (dims == 3) out << "," << hist[2][b];
            out << "\n";
        }
    }

    RunManifest m;
    m.subcommand = "map-labels";
    m.config_json = json{{"dims", dims}, {"bins", bins}}.dump();
    m.input_digests = {{images_path.string(), digest_file(images_path)},
                       {labels_path.string(), digest_file(labels_path)},
                       {norms_path.string(), digest_file(norms_path)}};
    m.outputs = {targets_path.string(), hist_path.string()};
    write_manifest(m, out_dir / "manifest.json");
    std::cout << "mapped " << vectors.size() << " images\n";
    return 0;
}

// ---- train -----------------------------------------------------------

int cmd_train(const fs::path& data_dir, const fs::path& config_path, const std::string& norms_flag,
              const fs::path& out_dir) {
    require_file(config_path);
    json config;
    try {
        std::ifstream in(config_path);
        config = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(config_path.string() + ": invalid JSON: " + e.what());
    }

    const ModelConfig model_cfg =
        config_from_json_string(config.value("model", json::object()).dump());
    const TrainConfig train_cfg = train_config_from_json(config.value("train", json::object()));

    const fs::path images_path = data_dir / "images.csv";
    const fs::path labels_path = data_dir / "labels.csv";
    const fs::path norms_path = resolve_norms(norms_flag, data_dir / "norms.csv");
    BuildStats stats;
    const SplitDataset ds =
        load_dataset(images_path, labels_path, norms_path, model_cfg.output_dims, &stats);
    std::cout << "dataset: " << ds.train.size() << " train / " << ds.val.size() << " val / "
              << ds.test.size() << " test (" << stats.unratable << " unratable dropped)\n";

    fs::create_directories(out_dir);
    const fs::path history_path = out_dir / "history.csv";
    const fs::path final_path = out_dir / "final.ckpt";
    const fs::path best_path = out_dir / "best.ckpt";

    std::ofstream history(history_path, std::ios::binary);
    if (!history) throw IoError("cannot write " + history_path.string());
    history << history_csv_header(model_cfg.output_dims);

    Model model = Model::build(model_cfg);
    TrainMeta meta;

    // The per-epoch checkpoint writes keep the last good state on disk if a
    // later epoch aborts on a non-finite loss.
    auto on_epoch = [&](const EpochRow& row, const Model& current, bool improved,
                        const Model& best) {
        history << history_csv_row(row);
        history.flush();
        meta.epoch = row.epoch;
        meta.lr = row.lr;
        meta.loss_history.push_back(row.train_loss);
        save_checkpoint(current, meta, final_path);
        if (improved) save_checkpoint(best, meta, best_path);
    };

    std::optional<TrainAbort> abort;
    std::optional<TrainResult> result;
    try {
        result = train(std::move(model), ds, train_cfg, on_epoch);
    } catch (const TrainAbort& e) {
        abort = e;
    }

    if (result && ds.val.empty()) save_checkpoint(result->best, meta, best_path);

    RunManifest m;
    m.subcommand = "train";
    m.config_json =
        json{{"model", json::parse(config_to_json_string(model_cfg))},
             {"train", train_config_to_json(train_cfg)}}
            .dump();
    m.seed = train_cfg.seed;
    m.input_digests = {{images_path.string(), digest_file(images_path)},
                       {labels_path.string(), digest_file(labels_path)},
                       {norms_path.string(), digest_file(norms_path)},
                       {config_path.string(), digest_file(config_path)}};
    m.outputs = {history_path.string(), final_path.string(), best_path.string()};
    write_manifest(m, out_dir / "manifest.json");

    if (abort) {
        std::cerr << "error: " << abort->what() << " (last good checkpoint kept at "
                  << final_path.string() << ")\n";
        return 1;
    }
    std::cout << "trained " << train_cfg.max_epochs << " epochs; final train loss "
              << result->history.back().train_loss << "; best epoch " << result->best_epoch
              << "\n";
    return 0;
}

// ---- eval ------------------------------------------------------------

int cmd_eval(const fs::path& ckpt_path, const fs::path& data_dir, const std::string& norms_flag,
             const std::string& split, const std::string& sweep_arg, bool flip_avg, int rank_k,
             double ref_acc, const std::string& score_kind, const fs::path& out_dir) {
    require_file(ckpt_path);
    const Model model = load_checkpoint(ckpt_path);
    const ModelConfig& mc = model.config();

    const fs::path images_path = data_dir / "images.csv";
    const fs::path labels_path = data_dir / "labels.csv";
    const fs::path norms_path = resolve_norms(norms_flag, data_dir / "norms.csv");
    const SplitDataset ds = load_dataset(images_path, labels_path, norms_path, mc.output_dims);
    const NormTable norms = load_norms(norms_path);

    const std::vector<LabeledExample>* examples = nullptr;
    if (split == "train")
        examples = &ds.train;
    else if (split == "val")
        examples = &ds.val;
    else if (split == "test")
        examples = &ds.test;
    else
        throw ConfigError("bad --split '" + split + "' (train|val|test)");
    if (examples->empty()) throw ConfigError("split '" + split + "' is empty");

    const PerImageScore kind = [&] {
        if (score_kind == "mean_abs") return PerImageScore::mean_abs;
        if (score_kind == "root_mean_sq") return PerImageScore::root_mean_sq;
        throw ConfigError("bad --score '" + score_kind + "' (mean_abs|root_mean_sq)");
    }();

    std::vector<std::string> ids;
    std::vector<EmotionVector> preds, targets;
    for (const auto& ex : *examples) {
        const Tensor chw = preprocess(ex.image, mc.input_size, mc.input_channels);
        EmotionVector p;
        if (flip_avg) {
            p = predict_flip_avg(model, chw);
        } else {
            Tensor batch(Shape{1, chw.shape[0], chw.shape[1], chw.shape[2]}, chw.data);
            const Tensor y = model.predict(batch);
            p.dims = mc.output_dims;
            p.valence = y.data[0];
            p.arousal = y.data[1];
            if (p.dims == 3) p.dominance = y.data[2];
        }
        ids.push_back(ex.image.id);
        preds.push_back(p);
        targets.push_back(ex.target);
    }

    const Thresholds th = derive_thresholds(norms);
    const SweepSpec sweep = parse_sweep(sweep_arg);
    const SweepCurve curve =
        threshold_sweep(preds, targets, uniform_grid(sweep.lo, sweep.hi, sweep.points), kind);

    std::vector<double> report_thresholds = {0.5 * th.t_unit, th.t_unit, 1.5 * th.t_unit,
                                             2.0 * th.t_unit};
    const std::string model_id = backbone_name(mc.backbone) + "-" + head_name(mc.head) + "-" +
                                 (mc.output_dims == 2 ? "va" : "vad");
    const EvalReport report = evaluate(model_id, preds, targets, report_thresholds, kind);

    fs::create_directories(out_dir);
    const fs::path report_txt = out_dir / "report.txt";
    const fs::path report_csv_path = out_dir / "report.csv";
    const fs::path sweep_path = out_dir / "sweep.csv";
    const fs::path rank_path = out_dir / "ranking.csv";

    {
        std::ofstream out(report_txt, std::ios::binary);
        if (!out) throw IoError("cannot write " + report_txt.string());
        out << report_text(report);
        out << "split: " << split << "\n";
        out << "flip_avg: " << (flip_avg ? "true" : "false") << "\n";
        out << "score: " << score_kind << "\n";
        out << "sd_mean: " << fmt6(th.sd_mean) << "\n";
        out << "threshold_unit: " << fmt6(th.t_unit) << "\n";
        const auto smallest = curve.smallest_threshold(ref_acc);
        out << "smallest_threshold_for_" << fmt6(ref_acc) << ": "
            << (smallest ? fmt6(*smallest) : std::string("not-achieved")) << "\n";
    }
    {
        std::ofstream out(report_csv_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + report_csv_path.string());
        out << report_csv(report);
    }
    {
        std::ofstream out(sweep_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + sweep_path.string());
        out << "threshold,accuracy\n";
        for (std::size_t i = 0; i < curve.thresholds.size(); ++i)
            out << fmt6(curve.thresholds[i]) << "," << fmt6(curve.acc[i]) << "\n";
    }
    {
        if (rank_k > static_cast<int>(preds.size()))
            throw ConfigError("--rank-k exceeds split size");
        const auto [best, worst] = rank_examples(ids, preds, targets, rank_k);
        std::ofstream out(rank_path, std::ios::binary);
        if (!out) throw IoError("cannot write " + rank_path.string());
        const int dims = mc.output_dims;
        out << "rank,image_id,rmse,valence_pred,arousal_pred"
            << (dims == 3 ? ",dominance_pred" : "") << ",valence_target,arousal_target"
            << (dims == 3 ? ",dominance_target" : "") << ",set\n";
        auto emit = [&](const std::vector<RankedExample>& list, const char* tag) {
            for (std::size_t i = 0; i < list.size(); ++i) {
                const auto& e = list[i];
                out << (i + 1) << "," << e.id << "," << fmt6(e.rmse) << ","
                    << fmt6(e.pred.valence) << "," << fmt6(e.pred.arousal);
                if (dims == 3) out << "," << fmt6(e.pred.dominance);
                out << "," << fmt6(e.target.valence) << "," << fmt6(e.target.arousal);
                if (dims == 3) out << "," << fmt6(e.target.dominance);
                out << "," << tag << "\n";
            }
        };
        emit(best, "best");
        emit(worst, "worst");
    }

    RunManifest m;
    m.subcommand = "eval";
    m.config_json = json{{"checkpoint", ckpt_path.string()}, {"split", split},
                         {"sweep", sweep_arg},               {"flip_avg", flip_avg},
                         {"rank_k", rank_k},                 {"ref_acc", ref_acc},
                         {"score", score_kind}}
                        .dump();
    m.input_digests = {{ckpt_path.string(), digest_file(ckpt_path)},
                       {images_path.string(), digest_file(images_path)},
                       {labels_path.string(), digest_file(labels_path)},
                       {norms_path.string(), digest_file(norms_path)}};
    m.outputs = {report_txt.string(), report_csv_path.string(), sweep_path.string(),
                 rank_path.string()};
    write_manifest(m, out_dir / "manifest.json");
    std::cout << report_text(report);
    return 0;
}

// ---- featmap ---------------------------------------------------------

int cmd_featmap(const fs::path& ckpt_path, const fs::path& images_path,
                const std::string& image_id, const std::string& layer, const std::string& mode,
                const fs::path& out_path) {
    require_file(ckpt_path);
    require_file(images_path);
    const Model model = load_checkpoint(ckpt_path);

    const auto images = parse_image_csv(images_path);
    const FaceImage* found = nullptr;
    for (const auto& img : images)
        if (img.id == image_id) {
            found = &img;
            break;
        }
    if (!found) throw ConfigError("image id '" + image_id + "' not found in " + images_path.string());

    const MapMode map_mode = [&] {
        if (mode == "avg") return MapMode::avg;
        if (mode == "max") return MapMode::max;
        throw ConfigError("bad --mode '" + mode + "' (avg|max)");
    }();

    const auto& mc = model.config();
    feature_map_export(model, preprocess(*found, mc.input_size, mc.input_channels), layer,
                       map_mode, out_path);

    RunManifest m;
    m.subcommand = "featmap";
    m.config_json =
        json{{"image_id", image_id}, {"layer", layer}, {"mode", mode}}.dump();
    m.input_digests = {{ckpt_path.string(), digest_file(ckpt_path)},
                       {images_path.string(), digest_file(images_path)}};
    m.outputs = {out_path.string()};
    write_manifest(m, out_path.string() + ".manifest.json");
    std::cout << "wrote " << out_path.string() << "\n";
    return 0;
}

// ---- trajectory ------------------------------------------------------

int cmd_trajectory(const fs::path& ckpt_path, const fs::path& frames_path,
                   const fs::path& out_csv, const std::string& out_svg) {
    require_file(ckpt_path);
    require_file(frames_path);
    const Model model = load_checkpoint(ckpt_path);
    const auto frames = parse_frames_csv(frames_path);
    const auto points = trajectory_predictions(model, frames);

    write_trajectory_csv(out_csv, points);
    std::vector<std::string> outputs = {out_csv.string()};
    if (!out_svg.empty()) {
        write_trajectory_svg(out_svg, points);
        outputs.push_back(out_svg);
    }

    RunManifest m;
    m.subcommand = "trajectory";
    m.config_json = json{{"frames", frames_path.string()}}.dump();
    m.input_digests = {{ckpt_path.string(), digest_file(ckpt_path)},
                       {frames_path.string(), digest_file(frames_path)}};
    m.outputs = outputs;
    write_manifest(m, out_csv.string() + ".manifest.json");
    std::cout << "wrote " << points.size() << " trajectory points\n";
    return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"dimensional emotion regression pipeline"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic desk-scale dataset");
    int synth_n = 40;
    std::uint64_t synth_seed = 1;
    std::string synth_out;
    synth->add_option("--n", synth_n, "number of examples");
    synth->add_option("--seed", synth_seed, "rng seed");
    synth->add_option("--out-dir", synth_out, "output directory")->required();

    // map-labels
    auto* maplb = app.add_subcommand("map-labels", "map crowd votes to V/A(/D) targets");
    std::string ml_images, ml_labels, ml_norms, ml_out;
    int ml_dims = 2, ml_bins = 32;
    maplb->add_option("--images", ml_images, "image CSV")->required();
    maplb->add_option("--labels", ml_labels, "crowd-label CSV")->required();
    maplb->add_option("--norms", ml_norms, "norms CSV (default: $DEMO_NORMS)");
    maplb->add_option("--dims", ml_dims, "2 (VA) or 3 (VAD)")->check(CLI::IsMember({2, 3}));
    maplb->add_option("--bins", ml_bins, "histogram bins");
    maplb->add_option("--out", ml_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train a model");
    std::string tr_data, tr_config, tr_norms, tr_out;
    train->add_option("--data-dir", tr_data, "directory with images.csv/labels.csv/norms.csv")
        ->required();
    train->add_option("--config", tr_config, "JSON config with model/train sections")->required();
    train->add_option("--norms", tr_norms, "override norms CSV (default: $DEMO_NORMS or data-dir)");
    train->add_option("--out-dir", tr_out, "output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string ev_ckpt, ev_data, ev_norms, ev_out, ev_split = "test", ev_sweep = "0:2:101";
    std::string ev_score = "mean_abs";
    bool ev_flip = true;
    int ev_rank_k = 10;
    double ev_ref_acc = 0.7116;
    eval->add_option("--checkpoint", ev_ckpt, "checkpoint file")->required();
    eval->add_option("--data-dir", ev_data, "dataset directory")->required();
    eval->add_option("--norms", ev_norms, "override norms CSV");
    eval->add_option("--split", ev_split, "train|val|test (default test)");
    eval->add_option("--sweep", ev_sweep, "threshold grid lo:hi:points (default 0:2:101)");
    eval->add_flag("--flip-avg,!--no-flip-avg", ev_flip, "flip-averaged inference (default on)");
    eval->add_option("--rank-k", ev_rank_k, "best/worst list length (default 10)");
    eval->add_option("--ref-acc", ev_ref_acc, "reference accuracy for smallest-threshold report");
    eval->add_option("--score", ev_score, "per-image score: mean_abs|root_mean_sq");
    eval->add_option("--out-dir", ev_out, "output directory")->required();

    // featmap
    auto* featmap = app.add_subcommand("featmap", "export a feature-map visualization");
    std::string fm_ckpt, fm_images, fm_id, fm_layer, fm_mode = "avg", fm_out;
    featmap->add_option("--checkpoint", fm_ckpt, "checkpoint file")->required();
    featmap->add_option("--images", fm_images, "image CSV to look the id up in")->required();
    featmap->add_option("--image-id", fm_id, "image id, e.g. fer0000012")->required();
    featmap->add_option("--layer", fm_layer, "conv layer name")->required();
    featmap->add_option("--mode", fm_mode, "avg|max");
    featmap->add_option("--out", fm_out, "output PGM path")->required();

    // trajectory
    auto* traj = app.add_subcommand("trajectory", "per-frame V/A predictions for a frame sequence");
    std::string tj_ckpt, tj_frames, tj_csv, tj_svg;
    traj->add_option("--checkpoint", tj_ckpt, "checkpoint file")->required();
    traj->add_option("--frames-csv", tj_frames, "frames CSV (header 'pixels')")->required();
    traj->add_option("--out-csv", tj_csv, "output CSV path")->required();
    traj->add_option("--out-svg", tj_svg, "optional output SVG path");

    try {
        app.parse(argc, argv);
        if (synth->parsed()) return cmd_synth(synth_n, synth_seed, synth_out);
        if (maplb->parsed())
            return cmd_map_labels(ml_images, ml_labels, resolve_norms(ml_norms, {}), ml_dims,
                                  ml_bins, ml_out);
        if (train->parsed()) return cmd_train(tr_data, tr_config, tr_norms, tr_out);
        if (eval->parsed())
            return cmd_eval(ev_ckpt, ev_data, ev_norms, ev_split, ev_sweep, ev_flip, ev_rank_k,
                            ev_ref_acc, ev_score, ev_out);
        if (featmap->parsed())
            return cmd_featmap(fm_ckpt, fm_images, fm_id, fm_layer, fm_mode, fm_out);
        if (traj->parsed()) return cmd_trajectory(tj_ckpt, tj_frames, tj_csv, tj_svg);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace demo::cli
