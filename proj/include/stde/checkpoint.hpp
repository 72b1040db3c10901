#pragma once

#include <filesystem>

#include "stde/affinity.hpp"
#include "stde/network.hpp"

namespace stde {

struct Checkpoint {
    NetworkParams params;
    RangeSet ranges;
    int iteration = 0;
};

/// "STCK1", u32 header length, JSON header (network config, ranges,
/// iteration), u32 tensor count, then per tensor: u32 name length, name,
/// u32 rank, u32 dims, f64 values. Little-endian.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace stde
