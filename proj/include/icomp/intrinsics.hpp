#pragma once

#include <filesystem>
#include <optional>

#include "icomp/float_map.hpp"
#include "icomp/vec3.hpp"

namespace icomp {

inline constexpr double kDefaultFovDeg = 50.0;
inline constexpr float kAlbedoEpsilon = 1e-4f;

/// Pinhole camera. Pixel (u, v) has integer coordinates; the principal point
/// defaults to the image center ((W-1)/2, (H-1)/2). Camera space is x right,
/// y down, z forward. `up` is world-up expressed in camera space.
struct CameraModel {
    double fov_deg = kDefaultFovDeg;
    int width = 0;
    int height = 0;
    std::optional<double> cx;
    std::optional<double> cy;
    Vec3 up{0.0, -1.0, 0.0};

    static CameraModel for_size(int width, int height, double fov_deg = kDefaultFovDeg);

    double focal() const;
    double principal_x() const { return cx.value_or((width - 1) * 0.5); }
    double principal_y() const { return cy.value_or((height - 1) * 0.5); }

    /// Camera-space point for pixel (u, v) at depth z.
    Vec3 unproject(double u, double v, double z) const;
    /// Pixel coordinates of a camera-space point (z must be positive).
    void project(const Vec3& p, double& u, double& v) const;

    void validate() const;
};

/// The intrinsic layers of one image: depth (1ch, metres, > 0), normals
/// (3ch, camera space, unit length), albedo (3ch, [0,1]), shading (3ch,
/// >= 0, HDR). Roughness and metallic are carried but unused by the
/// built-in renderer.
struct IntrinsicBundle {
    FloatMap depth;
    FloatMap normals;
    FloatMap albedo;
    FloatMap shading;
    std::optional<FloatMap> roughness;
    std::optional<FloatMap> metallic;
    CameraModel camera;

    int width() const { return depth.width(); }
    int height() const { return depth.height(); }
};

struct BundleTolerance {
    double normal_length = 1e-3;
};

/// Throws InvalidBundle on any violated invariant. When `region` is given,
/// value checks are restricted to pixels where region >= 0.5 (object layers
/// are only meaningful under their mask); shapes are always checked.
void validate_bundle(const IntrinsicBundle& bundle, const FloatMap* region = nullptr,
                     BundleTolerance tol = {});

/// shading = image / max(albedo, eps), per channel.
FloatMap derive_shading(const FloatMap& image, const FloatMap& albedo, float eps = kAlbedoEpsilon);

/// image = albedo * shading, per channel.
FloatMap reconstruct_image(const FloatMap& albedo, const FloatMap& shading);

/// 3-channel map of camera-space positions.
FloatMap unproject_depth(const FloatMap& depth, const CameraModel& camera);

// Bundle directory layout: depth.pfm normals.pfm albedo.pfm shading.pfm
// [roughness.pfm metallic.pfm] manifest.json. An object bundle may omit
// shading.pfm, in which case shading is loaded as zeros.
void write_bundle(const std::filesystem::path& dir, const IntrinsicBundle& bundle, bool include_shading = true);
IntrinsicBundle read_bundle(const std::filesystem::path& dir, bool require_shading = true);

void write_manifest(const std::filesystem::path& file, const CameraModel& camera);
CameraModel read_manifest(const std::filesystem::path& file);

}  // namespace icomp
