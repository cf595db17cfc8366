#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"

namespace icomp::testing {

inline FloatMap random_map(int w, int h, int c, std::uint64_t seed, float lo = 0.0f, float hi = 1.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> dist(lo, hi);
    FloatMap m(w, h, c);
    for (float& v : m.data()) v = dist(rng);
    return m;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("icomp_test_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Level camera looking at a horizontal ground plane `camera_height` below it,
// pitched down by `pitch_deg`. Depth, normals, constant albedo and a flat shading.
inline IntrinsicBundle ground_plane_bundle(int w, int h, double pitch_deg = 40.0, double camera_height = 1.5,
                                           float albedo = 0.5f, float shading = 0.8f) {
    IntrinsicBundle b;
    b.camera = CameraModel::for_size(w, h);
    const double p = pitch_deg * 3.14159265358979323846 / 180.0;
    // world up in camera space for a camera pitched down by p
    b.camera.up = Vec3{0.0, -std::cos(p), -std::sin(p)};
    b.depth = FloatMap(w, h, 1);
    b.normals = FloatMap(w, h, 3);
    b.albedo = FloatMap(w, h, 3, albedo);
    b.shading = FloatMap(w, h, 3, shading);
    const double f = b.camera.focal();
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 ray{(x - b.camera.principal_x()) / f, (y - b.camera.principal_y()) / f, 1.0};
            // plane: dot(P, up) = -camera_height, P = z * ray
            const double z = -camera_height / dot(ray, b.camera.up);
            b.depth.at(x, y) = static_cast<float>(z);
            for (int c = 0; c < 3; ++c) b.normals.at(x, y, c) = static_cast<float>(b.camera.up[c]);
        }
    }
    return b;
}

}  // namespace icomp::testing
