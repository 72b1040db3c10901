#include "stde/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "json.hpp"

namespace stde {
namespace {

std::string path_str(const std::filesystem::path& p) { return p.string(); }

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) {
        throw DataError("cannot open " + path_str(path));
    }
    return is;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw DataError("cannot write " + path_str(path));
    }
    return os;
}

// Reads one whitespace-delimited Netpbm header token, skipping comments.
int read_pnm_int(std::istream& is, const std::filesystem::path& path) {
    int ch = is.get();
    while (is) {
        if (ch == '#') {
            while (is && ch != '\n') {
                ch = is.get();
            }
        } else if (std::isspace(ch)) {
            ch = is.get();
        } else {
            break;
        }
    }
    std::string digits;
    while (is && std::isdigit(ch)) {
        digits.push_back(static_cast<char>(ch));
        ch = is.get();
    }
    if (digits.empty() || digits.size() > 9) {
        throw DataError("malformed Netpbm header in " + path_str(path));
    }
    // ch is the single whitespace byte that terminates the token.
    if (!std::isspace(ch)) {
        throw DataError("malformed Netpbm header in " + path_str(path));
    }
    return std::stoi(digits);
}

struct PnmHeader {
    int width;
    int height;
    int maxval;
};

PnmHeader read_pnm_header(std::istream& is, const char* magic, const std::filesystem::path& path) {
    char m[2] = {};
    is.read(m, 2);
    if (!is || m[0] != magic[0] || m[1] != magic[1]) {
        throw DataError("bad magic in " + path_str(path) + ", expected " + magic);
    }
    PnmHeader h{};
    h.width = read_pnm_int(is, path);
    h.height = read_pnm_int(is, path);
    h.maxval = read_pnm_int(is, path);
    if (h.width <= 0 || h.height <= 0) {
        throw DataError("non-positive image size in " + path_str(path));
    }
    return h;
}

} // namespace

namespace detail {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) {
        throw DataError("unexpected end of file");
    }
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }
float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

void write_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    write_u32(os, static_cast<std::uint32_t>(bits));
    write_u32(os, static_cast<std::uint32_t>(bits >> 32));
}

double read_f64(std::istream& is) {
    const std::uint64_t lo = read_u32(is);
    const std::uint64_t hi = read_u32(is);
    return std::bit_cast<double>(lo | (hi << 32));
}

} // namespace detail

void write_ppm(const std::filesystem::path& path, const RgbImage& image) {
    if (image.channels() != 3) {
        throw InvalidArgument("write_ppm: image must have 3 channels");
    }
    auto os = open_out(path);
    os << "P6\n" << image.width() << ' ' << image.height() << "\n255\n";
    os.write(reinterpret_cast<const char*>(image.data().data()), static_cast<std::streamsize>(image.size()));
    if (!os) {
        throw DataError("write failed: " + path_str(path));
    }
}

RgbImage read_ppm(const std::filesystem::path& path) {
    auto is = open_in(path);
    const PnmHeader h = read_pnm_header(is, "P6", path);
    if (h.maxval != 255) {
        throw DataError("only 8-bit PPM supported: " + path_str(path));
    }
    RgbImage img(h.height, h.width, 3);
    is.read(reinterpret_cast<char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
    if (!is) {
        throw DataError("truncated pixel data in " + path_str(path));
    }
    return img;
}

void write_label_map(const std::filesystem::path& path, const LabelMap& labels) {
    std::vector<unsigned char> bytes(labels.size() * 2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const std::int32_t v = labels.data()[i];
        if (v < 0 || v > 65535) {
            throw InvalidArgument("write_label_map: label " + std::to_string(v) + " outside 16-bit range");
        }
        bytes[2 * i] = static_cast<unsigned char>(v >> 8);
        bytes[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    }
    auto os = open_out(path);
    os << "P5\n" << labels.width() << ' ' << labels.height() << "\n65535\n";
    os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!os) {
        throw DataError("write failed: " + path_str(path));
    }
}

LabelMap read_label_map(const std::filesystem::path& path) {
    auto is = open_in(path);
    const PnmHeader h = read_pnm_header(is, "P5", path);
    if (h.maxval != 65535) {
        throw DataError("label map must be 16-bit (maxval 65535): " + path_str(path));
    }
    LabelMap labels(h.height, h.width, 1);
    std::vector<unsigned char> bytes(labels.size() * 2);
    is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!is) {
        throw DataError("truncated pixel data in " + path_str(path));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels.data()[i] = (std::int32_t(bytes[2 * i]) << 8) | std::int32_t(bytes[2 * i + 1]);
    }
    return labels;
}

void save_stmap(const std::filesystem::path& path, const STMap& stmap) {
    write_ppm(path, stmap.image);
    nlohmann::ordered_json j;
    j["H"] = stmap.height();
    j["W"] = stmap.width();
    j["origin"] = {stmap.meta.origin.x, stmap.meta.origin.y};
    j["destination"] = {stmap.meta.destination.x, stmap.meta.destination.y};
    auto wp = nlohmann::ordered_json::array();
    for (const auto& p : stmap.meta.waypoints) {
        wp.push_back({p.x, p.y});
    }
    j["waypoints"] = wp;
    j["frame_rate"] = stmap.meta.frame_rate;
    auto os = open_out(path.string() + ".json");
    os << j.dump(2) << '\n';
}

STMap load_stmap(const std::filesystem::path& path) {
    STMap out;
    out.image = read_ppm(path);
    const std::filesystem::path side = path.string() + ".json";
    if (!std::filesystem::exists(side)) {
        return out;
    }
    auto is = open_in(side);
    nlohmann::json j;
    try {
        is >> j;
        const int h = j.at("H").get<int>();
        const int w = j.at("W").get<int>();
        if (h != out.height() || w != out.width()) {
            throw DataError("sidecar " + side.string() + " says " + std::to_string(h) + "x" + std::to_string(w) +
                            " but image is " + std::to_string(out.height()) + "x" +
                            std::to_string(out.width()));
        }
        out.meta.origin = {j.at("origin")[0].get<int>(), j.at("origin")[1].get<int>()};
        out.meta.destination = {j.at("destination")[0].get<int>(), j.at("destination")[1].get<int>()};
        for (const auto& p : j.value("waypoints", nlohmann::json::array())) {
            out.meta.waypoints.push_back({p[0].get<int>(), p[1].get<int>()});
        }
        out.meta.frame_rate = j.value("frame_rate", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed sidecar " + side.string() + ": " + e.what());
    }
    return out;
}

void write_frame_pack(const std::filesystem::path& path, const std::vector<RgbImage>& frames) {
    auto os = open_out(path);
    os.write("STFR", 4);
    const int h = frames.empty() ? 0 : frames.front().height();
    const int w = frames.empty() ? 0 : frames.front().width();
    detail::write_u32(os, static_cast<std::uint32_t>(frames.size()));
    detail::write_u32(os, static_cast<std::uint32_t>(h));
    detail::write_u32(os, static_cast<std::uint32_t>(w));
    for (const auto& f : frames) {
        if (f.height() != h || f.width() != w || f.channels() != 3) {
            throw InvalidArgument("write_frame_pack: frames must share RGB dimensions");
        }
        os.write(reinterpret_cast<const char*>(f.data().data()), static_cast<std::streamsize>(f.size()));
    }
    if (!os) {
        throw DataError("write failed: " + path_str(path));
    }
}

std::vector<RgbImage> read_frame_pack(const std::filesystem::path& path) {
    auto is = open_in(path);
    char magic[4] = {};
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "STFR", 4) != 0) {
        throw DataError("bad magic in frame pack " + path_str(path));
    }
    const std::uint32_t count = detail::read_u32(is);
    const std::uint32_t h = detail::read_u32(is);
    const std::uint32_t w = detail::read_u32(is);
    if (h > 1u << 15 || w > 1u << 15) {
        throw DataError("implausible frame size in " + path_str(path));
    }
    std::vector<RgbImage> frames;
    for (std::uint32_t i = 0; i < count; ++i) {
        RgbImage f(static_cast<int>(h), static_cast<int>(w), 3);
        is.read(reinterpret_cast<char*>(f.data().data()), static_cast<std::streamsize>(f.size()));
        if (!is) {
            throw DataError("frame pack " + path_str(path) + " truncated at frame " + std::to_string(i));
        }
        frames.push_back(std::move(f));
    }
    return frames;
}

std::vector<RgbImage> read_frame_directory(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("not a directory: " + path_str(dir));
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".ppm") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<RgbImage> frames;
    frames.reserve(files.size());
    for (const auto& f : files) {
        frames.push_back(read_ppm(f));
    }
    return frames;
}

} // namespace stde
