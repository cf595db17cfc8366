#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "icomp/error.hpp"

namespace icomp {

/// H x W x C planar image of finite 32-bit floats, row-major with channels
/// interleaved. C is 1 or 3. Values are linear-light.
class FloatMap {
public:
    FloatMap() = default;
    FloatMap(int width, int height, int channels, float fill = 0.0f);
    FloatMap(int width, int height, int channels, std::vector<float> data);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    int channels() const noexcept { return channels_; }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t pixel_count() const noexcept {
        return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_);
    }
    bool empty() const noexcept { return data_.empty(); }

    std::size_t index(int x, int y, int c = 0) const noexcept {
        return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
    }
    float& at(int x, int y, int c = 0) noexcept { return data_[index(x, y, c)]; }
    float at(int x, int y, int c = 0) const noexcept { return data_[index(x, y, c)]; }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    std::span<float> row(int y) noexcept {
        return std::span<float>(data_).subspan(index(0, y), static_cast<std::size_t>(width_) * channels_);
    }
    std::span<const float> row(int y) const noexcept {
        return std::span<const float>(data_).subspan(index(0, y), static_cast<std::size_t>(width_) * channels_);
    }

    bool same_shape(const FloatMap& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_ && channels_ == other.channels_;
    }
    bool same_size(const FloatMap& other) const noexcept {
        return width_ == other.width_ && height_ == other.height_;
    }

    /// Throws Error(NonFinite) if any element is NaN or infinite. Kernels that
    /// write through data() call this before handing a map back.
    void check_finite() const;

    bool operator==(const FloatMap& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

/// Throws DimensionMismatch unless both maps have the same width and height
/// (and the same channel count when `same_channels`).
void require_same_size(const FloatMap& a, const FloatMap& b, const char* what, bool same_channels = false);

/// Single-channel view of channel `c`.
FloatMap extract_channel(const FloatMap& map, int c);

}  // namespace icomp
