#pragma once

#include <vector>

#include "icomp/float_map.hpp"
#include "icomp/parallel.hpp"

namespace icomp {

inline constexpr int kFeatherKernel = 15;
inline constexpr double kFeatherSigma = 1.5;

/// Normalized 1-D Gaussian taps, size `kernel` (odd).
std::vector<float> gaussian_kernel_1d(int kernel, double sigma);

/// Separable Gaussian blur with clamp-to-edge borders. Kernel must be odd
/// and sigma positive.
FloatMap gaussian_blur(const FloatMap& map, int kernel = kFeatherKernel, double sigma = kFeatherSigma,
                       Exec exec = Exec::parallel);

/// Rec. 709 luma on linear values.
FloatMap to_grayscale(const FloatMap& map);

inline float luma709(float r, float g, float b) {
    return 0.2126f * r + 0.7152f * g + 0.0722f * b;
}

/// Bilinear resampling with half-pixel centers and edge clamping.
FloatMap resize_bilinear(const FloatMap& map, int width, int height);

/// Per-element clamp into [lo, hi].
FloatMap clamp(const FloatMap& map, float lo, float hi);

}  // namespace icomp
