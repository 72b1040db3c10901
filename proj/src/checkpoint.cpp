#include "stde/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "stde/error.hpp"
#include "stde/io.hpp"

namespace stde {

namespace {

constexpr char kMagic[5] = {'S', 'T', 'C', 'K', '1'};
constexpr std::uint32_t kMaxHeader = 1u << 20;
constexpr std::uint32_t kMaxName = 4096;

} // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    nlohmann::ordered_json header;
    header["embedding_dim"] = ck.params.config.embedding_dim;
    header["widths"] = ck.params.config.widths;
    header["init_gain"] = ck.params.config.init_gain;
    header["ranges"] = ck.ranges.values();
    header["iteration"] = ck.iteration;
    const std::string text = header.dump();

    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot write checkpoint " + path.string());
    }
    os.write(kMagic, sizeof kMagic);
    detail::write_u32(os, static_cast<std::uint32_t>(text.size()));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(ck.params.tensors.size()));
    for (const auto& t : ck.params.tensors) {
        detail::write_u32(os, static_cast<std::uint32_t>(t.name.size()));
        os.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        detail::write_u32(os, static_cast<std::uint32_t>(t.shape.size()));
        for (int d : t.shape) {
            detail::write_u32(os, static_cast<std::uint32_t>(d));
        }
        for (double v : t.values) {
            detail::write_f64(os, v);
        }
    }
    if (!os) {
        throw DataError("failed writing checkpoint " + path.string());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("cannot open checkpoint " + path.string());
    }
    char magic[sizeof kMagic] = {};
    is.read(magic, sizeof magic);
    if (!is || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic))) {
        throw DataError(path.string() + ": not an STCK1 checkpoint");
    }
    const std::uint32_t len = detail::read_u32(is);
    if (len > kMaxHeader) {
        throw DataError(path.string() + ": checkpoint header too large");
    }
    std::string text(len, '\0');
    is.read(text.data(), len);
    if (!is) {
        throw DataError(path.string() + ": truncated checkpoint header");
    }

    Checkpoint ck;
    try {
        const auto header = nlohmann::json::parse(text);
        ck.params.config.embedding_dim = header.at("embedding_dim").get<int>();
        ck.params.config.widths = header.at("widths").get<std::vector<int>>();
        ck.params.config.init_gain = header.at("init_gain").get<double>();
        ck.ranges = RangeSet(header.at("ranges").get<std::vector<int>>());
        ck.iteration = header.at("iteration").get<int>();
        ck.params.config.validate();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": bad checkpoint header: " + e.what());
    } catch (const InvalidArgument& e) {
        throw DataError(path.string() + ": bad checkpoint header: " + e.what());
    }

    const auto layers = network_layers(ck.params.config);
    const std::uint32_t count = detail::read_u32(is);
    if (count != 2 * layers.size()) {
        throw DataError(path.string() + ": expected " + std::to_string(2 * layers.size()) + " tensors, found " +
                        std::to_string(count));
    }
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto& layer = layers[i / 2];
        const auto& s = layer.shape;
        const bool bias = (i % 2) == 1;
        const std::string expected_name = layer.name + (bias ? ".bias" : ".weight");
        const std::vector<int> expected_shape =
            bias ? std::vector<int>{s.out_channels} : std::vector<int>{s.out_channels, s.in_channels, s.kernel, s.kernel};

        const std::uint32_t nlen = detail::read_u32(is);
        if (nlen > kMaxName) {
            throw DataError(path.string() + ": tensor name too long");
        }
        NamedTensor t;
        t.name.resize(nlen);
        is.read(t.name.data(), nlen);
        const std::uint32_t rank = detail::read_u32(is);
        if (!is || t.name != expected_name || rank != expected_shape.size()) {
            throw DataError(path.string() + ": expected tensor " + expected_name);
        }
        std::size_t n = 1;
        for (std::uint32_t r = 0; r < rank; ++r) {
            t.shape.push_back(static_cast<int>(detail::read_u32(is)));
            n *= static_cast<std::size_t>(t.shape.back());
        }
        if (t.shape != expected_shape) {
            throw DataError(path.string() + ": shape mismatch for " + expected_name);
        }
        t.values.resize(n);
        for (double& v : t.values) {
            v = detail::read_f64(is);
            if (!std::isfinite(v)) {
                throw DataError(path.string() + ": non-finite value in " + expected_name);
            }
        }
        ck.params.tensors.push_back(std::move(t));
    }
    if (!is) {
        throw DataError(path.string() + ": truncated checkpoint");
    }
    return ck;
}

} // namespace stde
