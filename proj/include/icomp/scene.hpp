#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"
#include "icomp/renderer.hpp"
#include "icomp/vec3.hpp"

namespace icomp {

// World frame for procedural scenes: y up, the ground is the plane
// y = ground_height, the camera sits at (0, camera_height, 0) looking along
// +z, pitched down by pitch_deg.

enum class PrimitiveKind { box, sphere, cylinder };

const char* to_string(PrimitiveKind kind);
PrimitiveKind primitive_from_string(const std::string& name);

struct ObjectSpec {
    PrimitiveKind kind = PrimitiveKind::box;
    Vec3 size{0.5, 0.5, 0.5};     // box: full extents; sphere: x = radius; cylinder: x = radius, y = height
    Vec3 position{0.0, 0.0, 3.0}; // centre of the base (y >= ground)
    double yaw_deg = 0.0;         // box only
    Rgb albedo{0.7, 0.3, 0.2};

    double height() const;
};

struct SceneSpec {
    int width = 256;
    int height = 256;
    double fov_deg = kDefaultFovDeg;
    double pitch_deg = 40.0;
    double camera_height = 1.6;
    double ground_height = 0.0;
    std::optional<double> wall_z;  // back wall plane z = wall_z facing the camera
    Rgb ground_albedo{0.6, 0.6, 0.6};
    Rgb wall_albedo{0.8, 0.8, 0.75};
    ObjectSpec object;
    Vec3 light_direction_world = normalize(Vec3{0.5, 1.0, -0.4});
    Rgb light_intensity{1.0, 1.0, 1.0};
    Rgb ambient{0.25, 0.25, 0.25};

    CameraModel camera() const;
    LightSpec light() const;  // camera space
    Vec3 world_to_camera(const Vec3& dir) const;
    Vec3 camera_to_world(const Vec3& dir) const;
    Vec3 camera_position() const { return {0.0, camera_height, 0.0}; }
};

struct Hit {
    double t = 0.0;  // along the (unit) world ray
    Vec3 normal;     // world space, facing the ray origin
    Rgb albedo;
    bool object = false;
};

/// Nearest hit of a world-space ray against the scene (object optional).
std::optional<Hit> trace_scene(const SceneSpec& spec, const Vec3& origin, const Vec3& dir, bool with_object);

struct GeneratedScene {
    SceneSpec spec;
    IntrinsicBundle background;  // no object
    IntrinsicBundle full;        // with object
    FloatMap object_mask;
    FloatMap background_image;   // ground-truth x_bg
    FloatMap composite_image;    // ground-truth with-object render
    FloatMap shadow_mask;        // 1 where the object casts a shadow on the background
};

GeneratedScene generate_scene(const SceneSpec& spec, const VisibilityParams& vis = {});

/// Random but valid scene for seed `seed` (object in view, resting on the ground).
SceneSpec random_scene_spec(std::uint64_t seed, int width = 256, int height = 256);

/// Writes bg/ obj/ mask.pfm gt_composite.pfm gt_background.pfm shadow_mask.pfm scene.json.
void write_generated_scene(const std::filesystem::path& dir, const GeneratedScene& scene);

std::string scene_to_json(const SceneSpec& spec);
SceneSpec scene_from_json(const std::string& text);

// --- support region and placement ---

inline constexpr double kSupportAngleDeg = 15.0;
inline constexpr double kSupportMinRadius512 = 75.0;

/// 75 px at 512 px width, scaled linearly.
double scaled_min_radius(int width);

struct SupportRegion {
    FloatMap mask;
    FloatMap distance;      // exact Euclidean distance to the nearest non-support pixel
    double inscribed_radius = 0.0;
    int center_x = -1;
    int center_y = -1;
    bool accepted = false;
};

/// Exact Euclidean distance from each pixel to the nearest pixel where
/// `inside` < 0.5; pixels outside the image count as outside.
FloatMap distance_to_outside(const FloatMap& inside);

SupportRegion detect_support_region(const FloatMap& normals, const CameraModel& camera,
                                    double angle_thresh_deg = kSupportAngleDeg,
                                    std::optional<double> min_radius = std::nullopt);

struct Placement {
    bool accepted = false;
    int x = -1;
    int y = -1;
    double max_radius = 0.0;
};

Placement select_placement(const SupportRegion& region, double footprint_radius);

}  // namespace icomp
