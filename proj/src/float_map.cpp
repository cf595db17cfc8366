#include "icomp/float_map.hpp"

#include <cmath>
#include <string>

namespace icomp {

namespace {

void check_shape(int width, int height, int channels) {
    if (width < 1 || height < 1) {
        throw Error(ErrorCode::InvalidArgument,
                    "FloatMap dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    }
    if (channels != 1 && channels != 3) {
        throw Error(ErrorCode::InvalidArgument, "FloatMap channels must be 1 or 3, got " + std::to_string(channels));
    }
}

}  // namespace

FloatMap::FloatMap(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels) {
    check_shape(width, height, channels);
    if (!std::isfinite(fill)) throw Error(ErrorCode::NonFinite, "FloatMap fill value is not finite");
    data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

FloatMap::FloatMap(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
    check_shape(width, height, channels);
    if (data_.size() != static_cast<std::size_t>(width) * height * channels) {
        throw Error(ErrorCode::DimensionMismatch,
                    "FloatMap data length " + std::to_string(data_.size()) + " does not match " +
                        std::to_string(width) + "x" + std::to_string(height) + "x" + std::to_string(channels));
    }
    check_finite();
}

void FloatMap::check_finite() const {
    for (std::size_t i = 0; i < data_.size(); ++i) {
        if (!std::isfinite(data_[i])) {
            throw Error(ErrorCode::NonFinite, "non-finite value at element " + std::to_string(i));
        }
    }
}

void require_same_size(const FloatMap& a, const FloatMap& b, const char* what, bool same_channels) {
    if (!a.same_size(b) || (same_channels && a.channels() != b.channels())) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + "x" +
                        std::to_string(a.channels()) + " vs " + std::to_string(b.width()) + "x" +
                        std::to_string(b.height()) + "x" + std::to_string(b.channels()));
    }
}

FloatMap extract_channel(const FloatMap& map, int c) {
    if (c < 0 || c >= map.channels()) throw Error(ErrorCode::InvalidArgument, "channel index out of range");
    FloatMap out(map.width(), map.height(), 1);
    const auto src = map.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) dst[i] = src[i * map.channels() + c];
    return out;
}

}  // namespace icomp
