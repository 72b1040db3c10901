#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "stde/image.hpp"
#include "stde/stmap.hpp"

namespace stde {

enum class SpeedRegime { FreeFlow, Oscillation, StopAndGo };

std::string regime_name(SpeedRegime r);
SpeedRegime parse_regime(const std::string& s);

/// Synthetic single-lane scene. Speeds are in rows per frame; vehicles move
/// toward increasing row.
struct SceneConfig {
    int height = 64;
    int width = 64;
    int vehicles = 3;
    SpeedRegime regime = SpeedRegime::FreeFlow;
    int min_thickness = 4;
    int max_thickness = 8;
    double min_speed = 1.5;
    double max_speed = 2.5;
    int min_headway = 10; ///< frames between consecutive entries
    int max_headway = 18;
    int min_gap = 1;      ///< background rows kept between consecutive strands
    double shadow_probability = 0.0;
    int shadow_offset = 12; ///< rows the shadow band is shifted ahead of its strand
    double shadow_brightness = 0.55;
    std::vector<int> lane_marking_rows;
    double noise_amplitude = 8.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct Scene {
    STMap stmap;
    LabelMap labels;     ///< 0 background, 1..M by first appearance
    LabelMap shadow;     ///< 1 where a visible shadow pixel was rendered
    std::vector<std::vector<double>> rear_positions; ///< per label-1, per frame (real rows)
    std::vector<int> thickness;                      ///< per label-1
};

Scene generate_scene(const SceneConfig& config);

enum class Split { Train, Validation, Test };
std::string split_name(Split s);

struct DatasetConfig {
    SceneConfig scene;       ///< template; vehicles is the per-scene maximum
    int count = 10;
    std::uint64_t seed = 0;
    int min_vehicles = 1;
    bool mixed_regimes = true; ///< cycle free-flow / oscillation / stop-and-go
};

struct DatasetEntry {
    std::string name;
    Split split = Split::Train;
    Scene scene;
};

/// 60/20/20 split: validation and test get count/5 scenes each, training the rest.
std::vector<DatasetEntry> generate_dataset(const DatasetConfig& config);

/// Writes <name>.stmap.ppm (+ sidecar), <name>.labels.pgm, <name>.shadow.pgm
/// and manifest.txt ("<split> <name>" per line) into `dir`.
void write_dataset(const std::filesystem::path& dir, const std::vector<DatasetEntry>& entries);

struct ManifestEntry {
    std::string name;
    Split split = Split::Train;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);

} // namespace stde
