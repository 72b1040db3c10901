#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace stde::cli {

/// Exit codes.
constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kDataError = 2;

/// Output directory for relative output paths: --out-dir, else $STDE_OUT_DIR,
/// else the working directory.
std::filesystem::path resolve_output(const std::string& out_dir, const std::string& path);

struct SynthOptions {
    std::string out_dir;
    int count = 10;
    std::uint64_t seed = 0;
    int height = 64;
    int width = 64;
    int vehicles = 4;
    int min_vehicles = 1;
    std::string regime = "mixed";
    int min_thickness = 4;
    int max_thickness = 8;
    double shadow_probability = 0.5;
    int shadow_offset = 12;
    std::vector<int> lane_markings;
    double noise = 8.0;
    std::string subdir = "dataset";
};

struct StmapOptions {
    std::string out_dir;
    std::string frames; ///< frame pack file or directory of PPM frames
    std::vector<int> waypoints; ///< x0 y0 x1 y1 [x2 y2 ...]
    double frame_rate = 0.0;
    std::string output = "stmap.ppm";
};

struct TrainOptions {
    std::string out_dir;
    std::string data; ///< dataset directory with manifest.txt
    int iterations = 500;
    int batch_size = 12;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    int validate_every = 50;
    double alpha = 1.0, beta = 1.0, gamma = 1.0, delta = 1.0, tau = 1.0;
    bool plain_mse = false;
    std::vector<int> ranges = {1, 3, 5, 9, 27};
    std::vector<int> widths = {8, 16, 32, 32, 32};
    int embedding_dim = 16;
    double init_gain = 0.25;
    std::int64_t min_size = -1;
    bool record_wall_time = false;
    std::string checkpoint = "model.ckpt";
    std::string final_checkpoint;
    std::string log = "train_log.csv";
    std::string validation_log = "validation.csv";
};

struct InferOptions {
    std::string out_dir;
    std::string checkpoint;
    std::string stmap;
    std::string oracle_labels; ///< encode these labels instead of running the network
    std::vector<int> ranges = {1, 3, 5, 9, 27}; ///< only used with oracle labels
    std::string output = "affinity.staf";
    std::string embedding_image;
};

struct SegmentOptions {
    std::string out_dir;
    std::string affinity;
    std::int64_t min_size = -1;
    int attractive_max_range = 1;
    bool no_long_range_attraction = false;
    std::string output = "segmentation.pgm";
};

struct TrajOptions {
    std::string out_dir;
    std::string labels;
    std::string bumper = "rear";
    int camera = 0; ///< > 0 picks the bumper from the camera rule
    bool decreasing_row = false;
    int box_height = 7;
    int box_width = 7;
    double frame_rate = 0.0;
    std::string output = "trajectories.csv";
};

struct EvalOptions {
    std::string out_dir;
    std::vector<std::string> pred;
    std::vector<std::string> gt;
    double bf_tolerance = -1.0; ///< < 0: default for the scene size
    std::string csv;
};

int cmd_synth(const SynthOptions& o);
int cmd_stmap(const StmapOptions& o);
int cmd_train(const TrainOptions& o);
int cmd_infer(const InferOptions& o);
int cmd_segment(const SegmentOptions& o);
int cmd_traj(const TrajOptions& o);
int cmd_eval(const EvalOptions& o);

} // namespace stde::cli
