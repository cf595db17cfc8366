#include "icomp/image_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace icomp {

std::vector<float> gaussian_kernel_1d(int kernel, double sigma) {
    if (kernel < 1 || kernel % 2 == 0) {
        throw Error(ErrorCode::InvalidArgument, "blur kernel must be odd and >= 1, got " + std::to_string(kernel));
    }
    if (!(sigma > 0.0)) throw Error(ErrorCode::InvalidArgument, "blur sigma must be positive");
    const int radius = kernel / 2;
    std::vector<double> w(kernel);
    double sum = 0.0;
    for (int i = 0; i < kernel; ++i) {
        const double d = i - radius;
        w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[i];
    }
    std::vector<float> taps(kernel);
    for (int i = 0; i < kernel; ++i) taps[i] = static_cast<float>(w[i] / sum);
    return taps;
}

FloatMap gaussian_blur(const FloatMap& map, int kernel, double sigma, Exec exec) {
    const std::vector<float> taps = gaussian_kernel_1d(kernel, sigma);
    const int radius = kernel / 2;
    const int w = map.width();
    const int h = map.height();
    const int ch = map.channels();

    FloatMap tmp(w, h, ch);
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                float acc = 0.0f;
                for (int k = -radius; k <= radius; ++k) {
                    const int xx = std::clamp(x + k, 0, w - 1);
                    acc += taps[k + radius] * map.at(xx, y, c);
                }
                tmp.at(x, y, c) = acc;
            }
        }
    });

    FloatMap out(w, h, ch);
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < ch; ++c) {
                float acc = 0.0f;
                for (int k = -radius; k <= radius; ++k) {
                    const int yy = std::clamp(y + k, 0, h - 1);
                    acc += taps[k + radius] * tmp.at(x, yy, c);
                }
                out.at(x, y, c) = acc;
            }
        }
    });
    return out;
}

FloatMap to_grayscale(const FloatMap& map) {
    if (map.channels() != 3) {
        throw Error(ErrorCode::InvalidArgument, "to_grayscale expects 3 channels, got " + std::to_string(map.channels()));
    }
    FloatMap out(map.width(), map.height(), 1);
    const auto src = map.data();
    auto dst = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        const float r = src[3 * i], g = src[3 * i + 1], b = src[3 * i + 2];
        // keep the result inside the channel range despite rounding
        dst[i] = std::clamp(luma709(r, g, b), std::min({r, g, b}), std::max({r, g, b}));
    }
    return out;
}

FloatMap resize_bilinear(const FloatMap& map, int width, int height) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "resize target must be at least 1x1");
    if (width == map.width() && height == map.height()) return map;
    const int sw = map.width();
    const int sh = map.height();
    const int ch = map.channels();
    const double sx = static_cast<double>(sw) / width;
    const double sy = static_cast<double>(sh) / height;
    FloatMap out(width, height, ch);
    for (int y = 0; y < height; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(sh - 1));
        const int y0 = static_cast<int>(fy);
        const int y1 = std::min(y0 + 1, sh - 1);
        const double ty = fy - y0;
        for (int x = 0; x < width; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(sw - 1));
            const int x0 = static_cast<int>(fx);
            const int x1 = std::min(x0 + 1, sw - 1);
            const double tx = fx - x0;
            for (int c = 0; c < ch; ++c) {
                const double top = (1.0 - tx) * map.at(x0, y0, c) + tx * map.at(x1, y0, c);
                const double bottom = (1.0 - tx) * map.at(x0, y1, c) + tx * map.at(x1, y1, c);
                out.at(x, y, c) = static_cast<float>((1.0 - ty) * top + ty * bottom);
            }
        }
    }
    return out;
}

FloatMap clamp(const FloatMap& map, float lo, float hi) {
    FloatMap out = map;
    for (float& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

}  // namespace icomp
