#include "stde/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "stde/cluster.hpp"
#include "stde/error.hpp"
#include "stde/io.hpp"

namespace stde {

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    // 53-bit uniform in [0, 1); independent of the standard library's distributions.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int integer(int lo, int hi) { // inclusive
        return lo + static_cast<int>(uniform() * (hi - lo + 1));
    }
    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

struct Rgb {
    double r, g, b;
};

constexpr Rgb kPalette[] = {
    {205, 40, 40},  {40, 70, 210},  {40, 175, 60},  {225, 200, 40},
    {235, 125, 30}, {145, 50, 175}, {40, 185, 205}, {215, 60, 160},
};
constexpr double kRoad = 105.0;
constexpr double kMarking = 225.0;
constexpr double kAbsent = -std::numeric_limits<double>::infinity();
constexpr int kMinVisibleArea = 24;

std::uint8_t clamp_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

} // namespace

std::string regime_name(SpeedRegime r) {
    switch (r) {
    case SpeedRegime::FreeFlow: return "free-flow";
    case SpeedRegime::Oscillation: return "oscillation";
    case SpeedRegime::StopAndGo: return "stop-and-go";
    }
    return "free-flow";
}

SpeedRegime parse_regime(const std::string& s) {
    if (s == "free-flow") return SpeedRegime::FreeFlow;
    if (s == "oscillation") return SpeedRegime::Oscillation;
    if (s == "stop-and-go") return SpeedRegime::StopAndGo;
    throw InvalidArgument("unknown speed regime '" + s + "'");
}

void SceneConfig::validate() const {
    if (height < 32 || width < 32) {
        throw InvalidArgument("scene must be at least 32x32");
    }
    if (vehicles < 0) {
        throw InvalidArgument("vehicle count must be non-negative");
    }
    if (min_thickness < 2 || max_thickness < min_thickness) {
        throw InvalidArgument("thickness range must satisfy 2 <= min <= max");
    }
    if (!(min_speed > 0.0) || max_speed < min_speed) {
        throw InvalidArgument("speed range must satisfy 0 < min <= max");
    }
    if (min_headway < 1 || max_headway < min_headway) {
        throw InvalidArgument("headway range must satisfy 1 <= min <= max");
    }
    if (min_gap < 0) {
        throw InvalidArgument("min_gap must be non-negative");
    }
    if (!(shadow_probability >= 0.0 && shadow_probability <= 1.0)) {
        throw InvalidArgument("shadow probability must lie in [0, 1]");
    }
    if (!(shadow_brightness >= 0.0 && shadow_brightness <= 1.0)) {
        throw InvalidArgument("shadow brightness must lie in [0, 1]");
    }
    if (!(noise_amplitude >= 0.0)) {
        throw InvalidArgument("noise amplitude must be non-negative");
    }
    for (int r : lane_marking_rows) {
        if (r < 0 || r >= height) {
            throw InvalidArgument("lane marking row " + std::to_string(r) + " outside the scene");
        }
    }
    if (vehicles > 1 && (vehicles - 1) * min_headway > width - 8) {
        throw InvalidArgument("infeasible scene: " + std::to_string(vehicles) +
                              " vehicles with headway " + std::to_string(min_headway) +
                              " do not fit in " + std::to_string(width) + " frames");
    }
}

Scene generate_scene(const SceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const int h = cfg.height;
    const int w = cfg.width;
    const int m = cfg.vehicles;

    // Entry frames: the leader may already be inside the scene at frame 0.
    std::vector<int> entry(m);
    std::vector<int> thickness(m);
    std::vector<double> base_speed(m);
    for (int i = 0; i < m; ++i) {
        thickness[i] = rng.integer(cfg.min_thickness, cfg.max_thickness);
        base_speed[i] = rng.uniform(cfg.min_speed, cfg.max_speed);
        if (i == 0) {
            entry[i] = -rng.integer(0, w / 4);
        } else {
            const int budget = (w - 8) - entry[i - 1] - (m - 1 - i) * cfg.min_headway;
            entry[i] = entry[i - 1] + std::min(rng.integer(cfg.min_headway, cfg.max_headway), budget);
        }
    }

    const double period = rng.uniform(16.0, 32.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const int stop_start = rng.integer(w / 4, w / 2);
    const int stop_length = rng.integer(6, 12);

    const int t0 = m > 0 ? std::min(entry[0], 0) : 0;
    const int frames = w - t0;
    auto speed = [&](int i, int t) {
        const double v0 = base_speed[i];
        switch (cfg.regime) {
        case SpeedRegime::FreeFlow:
            return v0 * (1.0 + 0.1 * (2.0 * rng.uniform() - 1.0));
        case SpeedRegime::Oscillation:
            return v0 * (1.0 + 0.6 * std::sin(2.0 * std::numbers::pi * t / period + phase - 0.8 * i));
        case SpeedRegime::StopAndGo: {
            const int s = stop_start + 3 * i;
            return (t >= s && t < s + stop_length) ? 0.0 : v0;
        }
        }
        return v0;
    };

    // rear[i][t - t0]: top row (smallest) of vehicle i; -inf before entry.
    std::vector<std::vector<double>> rear(m, std::vector<double>(frames, kAbsent));
    for (int i = 0; i < m; ++i) {
        for (int t = t0; t < w; ++t) {
            const int k = t - t0;
            if (t < entry[i]) {
                continue;
            }
            double pos = t == entry[i] ? -static_cast<double>(thickness[i]) : rear[i][k - 1] + speed(i, t - 1);
            if (i > 0 && rear[i - 1][k] != kAbsent) {
                pos = std::min(pos, std::floor(rear[i - 1][k]) - cfg.min_gap - thickness[i]);
            }
            if (t > entry[i]) {
                pos = std::max(pos, rear[i][k - 1]);
            }
            rear[i][k] = pos;
        }
    }

    // Rasterize strands (provisional ids = vehicle index + 1).
    LabelMap raw(h, w, 1, 0);
    for (int i = 0; i < m; ++i) {
        for (int x = 0; x < w; ++x) {
            const double r = rear[i][x - t0];
            if (r == kAbsent) {
                continue;
            }
            const long top = static_cast<long>(std::floor(r));
            for (long y = std::max(top, 0L); y < std::min(top + thickness[i], static_cast<long>(h)); ++y) {
                raw(static_cast<int>(y), x) = i + 1;
            }
        }
    }
    std::vector<int> area(m + 1, 0);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        ++area[raw.data()[k]];
    }
    for (std::size_t k = 0; k < raw.size(); ++k) {
        std::int32_t& l = raw.data()[k];
        if (l > 0 && area[l] < kMinVisibleArea) {
            l = 0;
        }
    }

    Segmentation seg;
    seg.labels = raw;
    recount(seg);
    Segmentation ordered = relabel_by_time(seg);

    // Old vehicle index per new label.
    std::vector<int> vehicle_of(ordered.sizes.size(), -1);
    for (std::size_t k = 0; k < raw.size(); ++k) {
        if (raw.data()[k] > 0) {
            vehicle_of[ordered.labels.data()[k]] = raw.data()[k] - 1;
        }
    }

    Scene scene;
    scene.labels = ordered.labels;
    scene.shadow = LabelMap(h, w, 1, 0);
    for (std::size_t l = 1; l < vehicle_of.size(); ++l) {
        if (vehicle_of[l] < 0) {
            continue;
        }
        const int i = vehicle_of[l];
        std::vector<double> profile(w);
        for (int x = 0; x < w; ++x) {
            profile[x] = rear[i][x - t0];
        }
        scene.rear_positions.push_back(std::move(profile));
        scene.thickness.push_back(thickness[i]);
    }

    // Shadows: darker copies of a strand shifted ahead, only on road pixels.
    for (std::size_t l = 1; l < vehicle_of.size(); ++l) {
        if (vehicle_of[l] < 0 || !(rng.uniform() < cfg.shadow_probability)) {
            continue;
        }
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (scene.labels(y, x) != static_cast<std::int32_t>(l)) {
                    continue;
                }
                const int sy = y + cfg.shadow_offset;
                if (sy >= 0 && sy < h && scene.labels(sy, x) == 0) {
                    scene.shadow(sy, x) = 1;
                }
            }
        }
    }

    std::vector<bool> marking(h, false);
    for (int r : cfg.lane_marking_rows) {
        marking[r] = true;
    }
    std::vector<Rgb> colour(vehicle_of.size(), Rgb{0, 0, 0});
    const int offset = rng.integer(0, 7);
    for (std::size_t l = 1; l < vehicle_of.size(); ++l) {
        const Rgb base = kPalette[(offset + l) % std::size(kPalette)];
        const double gain = rng.uniform(0.85, 1.1);
        colour[l] = {base.r * gain, base.g * gain, base.b * gain};
    }

    RgbImage img(h, w, 3, 0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::int32_t l = scene.labels(y, x);
            Rgb c;
            if (l > 0) {
                c = colour[l];
            } else {
                const double g = marking[y] ? kMarking : kRoad;
                c = {g, g, g};
                if (scene.shadow(y, x) != 0) {
                    c = {c.r * cfg.shadow_brightness, c.g * cfg.shadow_brightness,
                         c.b * cfg.shadow_brightness};
                }
            }
            const double a = cfg.noise_amplitude;
            img(y, x, 0) = clamp_byte(c.r + a * (2.0 * rng.uniform() - 1.0));
            img(y, x, 1) = clamp_byte(c.g + a * (2.0 * rng.uniform() - 1.0));
            img(y, x, 2) = clamp_byte(c.b + a * (2.0 * rng.uniform() - 1.0));
        }
    }

    scene.stmap.image = std::move(img);
    scene.stmap.meta.origin = {0, 0};
    scene.stmap.meta.destination = {0, h - 1};
    scene.stmap.meta.frame_rate = 10.0;
    return scene;
}

std::string split_name(Split s) {
    switch (s) {
    case Split::Train: return "train";
    case Split::Validation: return "val";
    case Split::Test: return "test";
    }
    return "train";
}

std::vector<DatasetEntry> generate_dataset(const DatasetConfig& config) {
    if (config.count < 5) {
        throw InvalidArgument("dataset count must be at least 5");
    }
    if (config.min_vehicles < 0 || config.min_vehicles > config.scene.vehicles) {
        throw InvalidArgument("min_vehicles must lie in [0, vehicles]");
    }
    config.scene.validate();
    const int held_out = config.count / 5;
    const int train = config.count - 2 * held_out;
    Rng rng(config.seed);
    std::vector<DatasetEntry> out;
    out.reserve(config.count);
    for (int i = 0; i < config.count; ++i) {
        SceneConfig sc = config.scene;
        sc.seed = rng.next();
        sc.vehicles = rng.integer(config.min_vehicles, config.scene.vehicles);
        if (config.mixed_regimes) {
            sc.regime = static_cast<SpeedRegime>(i % 3);
        }
        DatasetEntry e;
        std::ostringstream name;
        name << "scene_" << std::setfill('0') << std::setw(3) << i;
        e.name = name.str();
        e.split = i < train ? Split::Train : (i < train + held_out ? Split::Validation : Split::Test);
        e.scene = generate_scene(sc);
        out.push_back(std::move(e));
    }
    return out;
}

void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetEntry>& entries) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "manifest.txt", std::ios::binary);
    if (!manifest) {
        throw DataError("cannot write " + (dir / "manifest.txt").string());
    }
    for (const auto& e : entries) {
        save_stmap(dir / (e.name + ".stmap.ppm"), e.scene.stmap);
        write_label_map(dir / (e.name + ".labels.pgm"), e.scene.labels);
        write_label_map(dir / (e.name + ".shadow.pgm"), e.scene.shadow);
        manifest << split_name(e.split) << ' ' << e.name << '\n';
    }
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
    std::ifstream in(manifest);
    if (!in) {
        throw DataError("cannot open manifest " + manifest.string());
    }
    std::vector<ManifestEntry> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string split;
        ManifestEntry e;
        if (!(ls >> split >> e.name)) {
            throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": expected '<split> <name>'");
        }
        if (split == "train") e.split = Split::Train;
        else if (split == "val") e.split = Split::Validation;
        else if (split == "test") e.split = Split::Test;
        else throw DataError(manifest.string() + ":" + std::to_string(lineno) + ": unknown split '" + split + "'");
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace stde
