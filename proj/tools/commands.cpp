#include "commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "stde/affinity.hpp"
#include "stde/checkpoint.hpp"
#include "stde/cluster.hpp"
#include "stde/error.hpp"
#include "stde/io.hpp"
#include "stde/metrics.hpp"
#include "stde/network.hpp"
#include "stde/stmap.hpp"
#include "stde/synth.hpp"
#include "stde/train.hpp"
#include "stde/trajectory.hpp"
#include "stde/visualize.hpp"

namespace fs = std::filesystem;

namespace stde::cli {

fs::path resolve_output(const std::string& out_dir, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) {
        return p;
    }
    fs::path base;
    if (!out_dir.empty()) {
        base = out_dir;
    } else if (const char* env = std::getenv("STDE_OUT_DIR"); env != nullptr && *env != '\0') {
        base = env;
    } else {
        return p;
    }
    return base / p;
}

namespace {

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
}

void require_file(const std::string& path, const char* what) {
    if (path.empty()) {
        throw InvalidArgument(std::string("missing ") + what);
    }
    if (!fs::exists(path)) {
        throw DataError(std::string(what) + " " + path + " does not exist");
    }
}

std::ofstream open_text(const fs::path& p) {
    ensure_parent(p);
    std::ofstream os(p);
    if (!os) {
        throw DataError("cannot write " + p.string());
    }
    return os;
}

} // namespace

int cmd_synth(const SynthOptions& o) {
    DatasetConfig d;
    d.count = o.count;
    d.seed = o.seed;
    d.min_vehicles = o.min_vehicles;
    d.scene.height = o.height;
    d.scene.width = o.width;
    d.scene.vehicles = o.vehicles;
    d.scene.min_thickness = o.min_thickness;
    d.scene.max_thickness = o.max_thickness;
    d.scene.shadow_probability = o.shadow_probability;
    d.scene.shadow_offset = o.shadow_offset;
    d.scene.lane_marking_rows = o.lane_markings;
    d.scene.noise_amplitude = o.noise;
    d.mixed_regimes = o.regime == "mixed";
    if (!d.mixed_regimes) {
        d.scene.regime = parse_regime(o.regime);
    }
    const fs::path dir = resolve_output(o.out_dir, o.subdir);
    const auto entries = generate_dataset(d);
    write_dataset(dir, entries);
    std::cout << "wrote " << entries.size() << " scenes to " << dir.string() << "\n";
    return kOk;
}

int cmd_stmap(const StmapOptions& o) {
    require_file(o.frames, "frames");
    if (o.waypoints.size() < 4 || o.waypoints.size() % 2 != 0) {
        throw InvalidArgument("--scanline needs an even number of coordinates, at least x0 y0 x1 y1");
    }
    std::vector<PixelCoord> pts;
    for (std::size_t i = 0; i < o.waypoints.size(); i += 2) {
        pts.push_back({o.waypoints[i], o.waypoints[i + 1]});
    }
    const auto frames = fs::is_directory(o.frames) ? read_frame_directory(o.frames) : read_frame_pack(o.frames);
    const Scanline line = pts.size() == 2 ? make_scanline(pts[0], pts[1]) : make_polyline_scanline(pts);
    STMap map = build_stmap(frames, line, o.frame_rate);
    if (pts.size() > 2) {
        map.meta.waypoints = pts;
    }
    const fs::path out = resolve_output(o.out_dir, o.output);
    ensure_parent(out);
    save_stmap(out, map);
    std::cout << "stmap " << map.height() << "x" << map.width() << " -> " << out.string() << "\n";
    return kOk;
}

namespace {

struct LoadedSplit {
    std::vector<TrainingSample> train;
    std::vector<TrainingSample> validation;
};

LoadedSplit load_training_data(const fs::path& dir, const NetworkConfig& net, const RangeSet& ranges,
                               bool balanced) {
    LoadedSplit out;
    for (const auto& e : read_manifest(dir / "manifest.txt")) {
        if (e.split == Split::Test) {
            continue;
        }
        const STMap map = load_stmap(dir / (e.name + ".stmap.ppm"));
        const LabelMap labels = read_label_map(dir / (e.name + ".labels.pgm"));
        if (labels.height() != map.height() || labels.width() != map.width()) {
            throw DataError(e.name + ": labels are " + std::to_string(labels.height()) + "x" +
                            std::to_string(labels.width()) + ", stmap is " + std::to_string(map.height()) + "x" +
                            std::to_string(map.width()));
        }
        auto sample = make_sample(image_to_tensor(map.image), labels, net, ranges, balanced);
        (e.split == Split::Train ? out.train : out.validation).push_back(std::move(sample));
    }
    return out;
}

} // namespace

int cmd_train(const TrainOptions& o) {
    require_file(o.data, "dataset directory");
    NetworkConfig net;
    net.widths = o.widths;
    net.embedding_dim = o.embedding_dim;
    net.init_gain = o.init_gain;
    net.validate();
    const RangeSet ranges(o.ranges);

    TrainConfig cfg;
    cfg.ranges = ranges;
    cfg.iterations = o.iterations;
    cfg.batch_size = o.batch_size;
    cfg.seed = o.seed;
    cfg.validate_every = o.validate_every;
    cfg.adam.learning_rate = o.learning_rate;
    cfg.adam.beta1 = o.beta1;
    cfg.adam.beta2 = o.beta2;
    cfg.adam.epsilon = o.epsilon;
    cfg.weights.alpha = o.alpha;
    cfg.weights.beta = o.beta;
    cfg.weights.gamma = o.gamma;
    cfg.weights.delta = o.delta;
    cfg.weights.tau = o.tau;
    cfg.weights.balanced_mse = !o.plain_mse;
    cfg.segment.min_size = o.min_size;
    cfg.record_wall_time = o.record_wall_time;

    const LoadedSplit data = load_training_data(o.data, net, ranges, cfg.weights.balanced_mse);

    const fs::path log_path = resolve_output(o.out_dir, o.log);
    std::ofstream log = open_text(log_path);
    write_train_log_header(log);
    const TrainResult r = train(init_params(net, o.seed), data.train, data.validation, cfg,
                                [&](const TrainLogRow& row) { write_train_log_row(log, row); });

    std::ofstream val = open_text(resolve_output(o.out_dir, o.validation_log));
    val << "iter,val_sbd\n" << std::setprecision(17);
    for (const auto& v : r.validation) {
        val << v.iteration << "," << v.sbd << "\n";
    }

    const fs::path ckpt = resolve_output(o.out_dir, o.checkpoint);
    ensure_parent(ckpt);
    save_checkpoint(ckpt, {r.best_params, ranges, r.best_iteration});
    if (!o.final_checkpoint.empty()) {
        const fs::path fin = resolve_output(o.out_dir, o.final_checkpoint);
        ensure_parent(fin);
        save_checkpoint(fin, {r.final_params, ranges, o.iterations});
    }
    std::cout << "trained " << o.iterations << " iterations, best validation SBD " << std::fixed
              << std::setprecision(6) << r.best_validation_sbd << " at iteration " << r.best_iteration << " -> "
              << ckpt.string() << "\n";
    return kOk;
}

int cmd_infer(const InferOptions& o) {
    const fs::path out = resolve_output(o.out_dir, o.output);
    if (!o.oracle_labels.empty()) {
        require_file(o.oracle_labels, "labels");
        if (!o.embedding_image.empty()) {
            throw InvalidArgument("--embedding-image needs a network checkpoint");
        }
        ensure_parent(out);
        write_affinity(out, encode_affinity(read_label_map(o.oracle_labels), RangeSet(o.ranges)));
        std::cout << "oracle affinity -> " << out.string() << "\n";
        return kOk;
    }
    require_file(o.checkpoint, "checkpoint");
    require_file(o.stmap, "stmap");
    const Checkpoint ck = load_checkpoint(o.checkpoint);
    const STMap map = load_stmap(o.stmap);
    const EmbeddingPyramid pyr = forward(image_to_tensor(map.image), ck.params);
    ensure_parent(out);
    write_affinity(out, predicted_affinity(pyr.full, ck.ranges));
    if (!o.embedding_image.empty()) {
        const fs::path img = resolve_output(o.out_dir, o.embedding_image);
        ensure_parent(img);
        write_ppm(img, embedding_to_rgb(pyr.full));
    }
    std::cout << "affinity " << map.height() << "x" << map.width() << "x" << ck.ranges.channels() << " -> "
              << out.string() << "\n";
    return kOk;
}

int cmd_segment(const SegmentOptions& o) {
    require_file(o.affinity, "affinity");
    SegmentConfig cfg;
    cfg.min_size = o.min_size;
    cfg.graph.attractive_max_range = o.attractive_max_range;
    cfg.graph.long_range_attraction = !o.no_long_range_attraction;
    const Segmentation seg = segment(read_affinity(o.affinity), cfg);
    const fs::path out = resolve_output(o.out_dir, o.output);
    ensure_parent(out);
    write_label_map(out, seg.labels);
    std::cout << seg.instance_count() << " instances -> " << out.string() << "\n";
    return kOk;
}

int cmd_traj(const TrajOptions& o) {
    require_file(o.labels, "labels");
    TrajectoryConfig cfg;
    cfg.bumper = o.camera > 0 ? default_bumper_for_camera(o.camera) : parse_bumper(o.bumper);
    cfg.direction = o.decreasing_row ? TravelDirection::DecreasingRow : TravelDirection::IncreasingRow;
    cfg.box_height = o.box_height;
    cfg.box_width = o.box_width;
    const TrajectorySet ts = extract_trajectories(read_label_map(o.labels), cfg);
    const fs::path out = resolve_output(o.out_dir, o.output);
    ensure_parent(out);
    export_trajectories(out, ts, {o.frame_rate});
    std::cout << ts.vehicles.size() << " " << bumper_name(ts.bumper) << " trajectories -> " << out.string() << "\n";
    return kOk;
}

int cmd_eval(const EvalOptions& o) {
    if (o.pred.empty() || o.pred.size() != o.gt.size()) {
        throw InvalidArgument("--pred and --gt must list the same nonzero number of files");
    }
    const std::size_t n = o.pred.size();
    std::vector<LabelMap> pred(n), gt(n);
    for (std::size_t i = 0; i < n; ++i) {
        require_file(o.pred[i], "prediction");
        require_file(o.gt[i], "ground truth");
        pred[i] = read_label_map(o.pred[i]);
        gt[i] = read_label_map(o.gt[i]);
        if (!pred[i].same_shape(gt[i])) {
            throw DataError(o.pred[i] + " is " + std::to_string(pred[i].height()) + "x" +
                            std::to_string(pred[i].width()) + " but " + o.gt[i] + " is " +
                            std::to_string(gt[i].height()) + "x" + std::to_string(gt[i].width()));
        }
    }

    std::vector<MetricReport> reports(n);
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < n; ++i) {
        const double tol = o.bf_tolerance >= 0 ? o.bf_tolerance : default_bf_tolerance(gt[i].height(), gt[i].width());
        reports[i] = evaluate(pred[i], gt[i], tol);
    }

    MetricReport mean;
    for (const auto& r : reports) {
        mean.global_accuracy += r.global_accuracy / n;
        mean.mean_accuracy += r.mean_accuracy / n;
        mean.mean_iou += r.mean_iou / n;
        mean.weighted_mean_iou += r.weighted_mean_iou / n;
        mean.bf_score += r.bf_score / n;
        mean.sbd += r.sbd / n;
    }
    std::cout << format_report(mean);

    if (!o.csv.empty()) {
        std::ofstream csv = open_text(resolve_output(o.out_dir, o.csv));
        csv << "pred,gt," << report_csv_header() << "\n";
        for (std::size_t i = 0; i < n; ++i) {
            csv << o.pred[i] << "," << o.gt[i] << "," << report_csv_row(reports[i]) << "\n";
        }
        csv << "mean,mean," << report_csv_row(mean) << "\n";
    }
    return kOk;
}

} // namespace stde::cli
