#include "msflow/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

namespace msflow {
namespace {

constexpr std::array<char, 4> kFlowMagic{'P', 'I', 'E', 'H'};

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string next_token(const std::vector<unsigned char>& buf, std::size_t& pos) {
    while (pos < buf.size()) {
        if (buf[pos] == '#') {
            while (pos < buf.size() && buf[pos] != '\n')
                ++pos;
        } else if (std::isspace(buf[pos])) {
            ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < buf.size() && !std::isspace(buf[pos]) && buf[pos] != '#')
        tok.push_back(static_cast<char>(buf[pos++]));
    if (tok.empty())
        throw IoError("truncated PNM header");
    return tok;
}

long parse_positive(const std::string& tok) {
    std::size_t used = 0;
    long v = 0;
    try {
        v = std::stol(tok, &used);
    } catch (const std::exception&) {
        throw IoError("bad PNM header field '" + tok + "'");
    }
    if (used != tok.size() || v <= 0)
        throw IoError("bad PNM header field '" + tok + "'");
    return v;
}

void write_bytes(const std::filesystem::path& path, const std::string& header, const std::vector<unsigned char>& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << header;
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i)
        out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32le(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

std::vector<PlaneD> load_image(const std::filesystem::path& path, ChannelRole role) {
    const auto buf = read_all(path);
    std::size_t pos = 0;
    const std::string magic = next_token(buf, pos);
    int channels = 0;
    if (magic == "P5")
        channels = 1;
    else if (magic == "P6")
        channels = 3;
    else
        throw IoError(path.string() + ": unsupported raster format '" + magic + "'");

    const long width = parse_positive(next_token(buf, pos));
    const long height = parse_positive(next_token(buf, pos));
    const long maxval = parse_positive(next_token(buf, pos));
    if (maxval > 65535)
        throw IoError(path.string() + ": unsupported bit depth (maxval " + std::to_string(maxval) + ")");
    ++pos;  // single whitespace byte before the raster

    const int bytes_per_sample = maxval > 255 ? 2 : 1;
    const std::size_t needed = static_cast<std::size_t>(width) * height * channels * bytes_per_sample;
    if (pos + needed > buf.size())
        throw IoError(path.string() + ": truncated raster payload");

    std::vector<PlaneD> planes(channels, PlaneD(height, width));
    const double scale = 1.0 / static_cast<double>(maxval);
    const unsigned char* p = buf.data() + pos;
    for (long y = 0; y < height; ++y)
        for (long x = 0; x < width; ++x)
            for (int c = 0; c < channels; ++c) {
                unsigned value = *p++;
                if (bytes_per_sample == 2)
                    value = (value << 8) | *p++;
                planes[c](y, x) = std::min(1.0, value * scale);
            }

    if (role == ChannelRole::nir && channels != 1)
        throw IoError(path.string() + ": nir raster must be single channel");
    return planes;
}

MultispectralImage make_multispectral(std::vector<PlaneD> visible, std::optional<PlaneD> nir) {
    if (visible.empty() || visible.size() > 3)
        throw InvalidArgument("visible raster needs 1 to 3 channels");
    MultispectralImage img{std::move(visible), std::move(nir)};
    img.validate();
    return img;
}

MultispectralImage load_multispectral(const std::filesystem::path& visible_path,
                                      const std::optional<std::filesystem::path>& nir_path) {
    std::optional<PlaneD> nir;
    if (nir_path)
        nir = load_image(*nir_path, ChannelRole::nir).front();
    return make_multispectral(load_image(visible_path, ChannelRole::visible), std::move(nir));
}

void write_pnm(const std::filesystem::path& path, const std::vector<PlaneD>& channels, int bit_depth) {
    if (channels.size() != 1 && channels.size() != 3)
        throw InvalidArgument("write_pnm expects 1 or 3 channels");
    if (bit_depth != 8 && bit_depth != 16)
        throw InvalidArgument("bit depth must be 8 or 16");
    const auto h = channels.front().rows();
    const auto w = channels.front().cols();
    const unsigned maxval = bit_depth == 8 ? 255u : 65535u;

    std::vector<unsigned char> data;
    data.reserve(static_cast<std::size_t>(w * h) * channels.size() * (bit_depth / 8));
    for (Eigen::Index y = 0; y < h; ++y)
        for (Eigen::Index x = 0; x < w; ++x)
            for (const auto& c : channels) {
                const auto q = static_cast<unsigned>(std::lround(std::clamp(c(y, x), 0.0, 1.0) * maxval));
                if (bit_depth == 16)
                    data.push_back(static_cast<unsigned char>(q >> 8));
                data.push_back(static_cast<unsigned char>(q & 0xffu));
            }
    const std::string header = std::string(channels.size() == 1 ? "P5" : "P6") + "\n" + std::to_string(w) + " " +
                               std::to_string(h) + "\n" + std::to_string(maxval) + "\n";
    write_bytes(path, header, data);
}

void write_gray8(const std::filesystem::path& path, const PlaneU8& image) {
    std::vector<unsigned char> data(image.data(), image.data() + image.size());
    write_bytes(path, "P5\n" + std::to_string(image.cols()) + " " + std::to_string(image.rows()) + "\n255\n", data);
}

void write_rgb8(const std::filesystem::path& path, const std::vector<PlaneU8>& rgb) {
    if (rgb.size() != 3)
        throw InvalidArgument("write_rgb8 expects 3 planes");
    std::vector<unsigned char> data;
    data.reserve(static_cast<std::size_t>(rgb[0].size()) * 3);
    for (Eigen::Index i = 0; i < rgb[0].size(); ++i)
        for (const auto& c : rgb)
            data.push_back(c.data()[i]);
    write_bytes(path, "P6\n" + std::to_string(rgb[0].cols()) + " " + std::to_string(rgb[0].rows()) + "\n255\n", data);
}

FlowField read_flow(const std::filesystem::path& path) {
    const auto buf = read_all(path);
    if (buf.size() < 12 || !std::equal(kFlowMagic.begin(), kFlowMagic.end(), buf.begin()))
        throw IoError(path.string() + ": bad flow magic");
    const auto width = static_cast<std::int32_t>(get_u32le(buf.data() + 4));
    const auto height = static_cast<std::int32_t>(get_u32le(buf.data() + 8));
    if (width <= 0 || height <= 0)
        throw IoError(path.string() + ": bad flow dimensions");
    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 2;
    if (buf.size() < 12 + count * 4)
        throw IoError(path.string() + ": truncated flow payload");

    FlowField f(width, height);
    const unsigned char* p = buf.data() + 12;
    for (std::int32_t y = 0; y < height; ++y)
        for (std::int32_t x = 0; x < width; ++x) {
            f.u(y, x) = std::bit_cast<float>(get_u32le(p));
            f.v(y, x) = std::bit_cast<float>(get_u32le(p + 4));
            p += 8;
        }
    return f;
}

void write_flow(const FlowField& field, const std::filesystem::path& path) {
    if (field.width() <= 0 || field.height() <= 0)
        throw InvalidArgument("flow field must have positive dimensions");
    std::vector<unsigned char> out;
    out.reserve(12 + static_cast<std::size_t>(field.u.size()) * 8);
    out.insert(out.end(), kFlowMagic.begin(), kFlowMagic.end());
    put_u32le(out, static_cast<std::uint32_t>(field.width()));
    put_u32le(out, static_cast<std::uint32_t>(field.height()));
    for (Eigen::Index y = 0; y < field.height(); ++y)
        for (Eigen::Index x = 0; x < field.width(); ++x) {
            for (double c : {field.u(y, x), field.v(y, x)}) {
                if (!std::isfinite(c))
                    throw InvalidArgument("non-finite flow component at (" + std::to_string(x) + "," +
                                          std::to_string(y) + ")");
                // Components beyond float range collapse onto the canonical sentinel.
                const float stored = std::abs(c) > std::numeric_limits<float>::max()
                                         ? static_cast<float>(kUnknownFlow)
                                         : static_cast<float>(c);
                put_u32le(out, std::bit_cast<std::uint32_t>(stored));
            }
        }
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw IoError("cannot write " + path.string());
    os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!os)
        throw IoError("write failed for " + path.string());
}

}  // namespace msflow
