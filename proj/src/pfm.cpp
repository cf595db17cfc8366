#include "icomp/pfm.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace icomp {

namespace {

static_assert(sizeof(float) == 4);

std::uint32_t byteswap32(std::uint32_t v) {
    return (v >> 24) | ((v >> 8) & 0x0000FF00u) | ((v << 8) & 0x00FF0000u) | (v << 24);
}

// Reads one whitespace-delimited token, leaving pos on the single whitespace
// byte that terminated it.
std::string next_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw Error(ErrorCode::MalformedHeader, "PFM header truncated");
    return bytes.substr(start, pos - start);
}

int parse_dim(const std::string& token) {
    std::size_t used = 0;
    int value = 0;
    try {
        value = std::stoi(token, &used);
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedHeader, "PFM dimension is not an integer: " + token);
    }
    if (used != token.size() || value < 1) throw Error(ErrorCode::MalformedHeader, "bad PFM dimension: " + token);
    return value;
}

}  // namespace

std::string encode_pfm(const FloatMap& map) {
    if (map.empty()) throw Error(ErrorCode::InvalidArgument, "cannot encode an empty map");
    map.check_finite();
    std::ostringstream header;
    header << (map.channels() == 3 ? "PF" : "Pf") << '\n' << map.width() << ' ' << map.height() << "\n-1.0\n";
    std::string out = header.str();
    const std::size_t row_floats = static_cast<std::size_t>(map.width()) * map.channels();
    const std::size_t offset = out.size();
    out.resize(offset + map.size() * sizeof(float));
    char* dst = out.data() + offset;
    for (int y = map.height() - 1; y >= 0; --y) {
        const auto row = map.row(y);
        for (std::size_t i = 0; i < row_floats; ++i) {
            std::uint32_t bits = std::bit_cast<std::uint32_t>(row[i]);
            if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
            std::memcpy(dst, &bits, sizeof(bits));
            dst += sizeof(bits);
        }
    }
    return out;
}

FloatMap decode_pfm(const std::string& bytes) {
    std::size_t pos = 0;
    const std::string magic = next_token(bytes, pos);
    int channels = 0;
    if (magic == "PF") {
        channels = 3;
    } else if (magic == "Pf") {
        channels = 1;
    } else {
        throw Error(ErrorCode::MalformedHeader, "unknown PFM magic '" + magic + "'");
    }
    const int width = parse_dim(next_token(bytes, pos));
    const int height = parse_dim(next_token(bytes, pos));
    const std::string scale_token = next_token(bytes, pos);
    double scale = 0.0;
    try {
        scale = std::stod(scale_token);
    } catch (const std::exception&) {
        throw Error(ErrorCode::MalformedHeader, "PFM scale is not a number: " + scale_token);
    }
    if (scale == 0.0 || !std::isfinite(scale)) throw Error(ErrorCode::MalformedHeader, "PFM scale must be non-zero");
    if (pos >= bytes.size()) throw Error(ErrorCode::DimensionMismatch, "PFM has no pixel data");
    ++pos;  // single whitespace byte after the scale

    const bool little = scale < 0.0;
    const bool swap = little != (std::endian::native == std::endian::little);
    const std::size_t count = static_cast<std::size_t>(width) * height * channels;
    if (bytes.size() - pos != count * sizeof(float)) {
        throw Error(ErrorCode::DimensionMismatch, "PFM payload holds " + std::to_string(bytes.size() - pos) +
                                                      " bytes, expected " + std::to_string(count * sizeof(float)));
    }
    std::vector<float> data(count);
    const std::size_t row_floats = static_cast<std::size_t>(width) * channels;
    const char* src = bytes.data() + pos;
    for (int y = height - 1; y >= 0; --y) {
        float* dst = data.data() + static_cast<std::size_t>(y) * row_floats;
        for (std::size_t i = 0; i < row_floats; ++i) {
            std::uint32_t bits = 0;
            std::memcpy(&bits, src, sizeof(bits));
            src += sizeof(bits);
            if (swap) bits = byteswap32(bits);
            dst[i] = std::bit_cast<float>(bits);
        }
    }
    return FloatMap(width, height, channels, std::move(data));
}

FloatMap read_pfm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return decode_pfm(buffer.str());
    } catch (const Error& e) {
        throw Error(e.code(), path.string() + ": " + e.what());
    }
}

void write_pfm(const std::filesystem::path& path, const FloatMap& map) {
    const std::string bytes = encode_pfm(map);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

}  // namespace icomp
