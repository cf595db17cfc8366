#include <doctest.h>

#include <cmath>
#include <random>

#include "icomp/scene.hpp"
#include "support.hpp"

using namespace icomp;

namespace {

constexpr double kPi = 3.14159265358979323846;

Vec3 at3(const FloatMap& m, int x, int y) { return {m.at(x, y, 0), m.at(x, y, 1), m.at(x, y, 2)}; }

// Normals tilted away from camera.up by `deg` about the camera x axis.
FloatMap tilted_normals(int w, int h, const Vec3& up, double deg) {
    const Vec3 axis{1.0, 0.0, 0.0};
    const Vec3 perp = normalize(cross(axis, up));
    const double a = deg * kPi / 180.0;
    const Vec3 n = up * std::cos(a) + perp * std::sin(a);
    FloatMap out(w, h, 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<float>(n[c]);
    return out;
}

// Distance from (x, y) to the nearest outside pixel, the one-pixel ring
// around the image included.
double brute_distance(const FloatMap& inside, int x, int y) {
    double best = std::numeric_limits<double>::infinity();
    for (int v = -1; v <= inside.height(); ++v)
        for (int u = -1; u <= inside.width(); ++u) {
            const bool in_image = u >= 0 && v >= 0 && u < inside.width() && v < inside.height();
            if (in_image && inside.at(u, v) >= 0.5f) continue;
            best = std::min(best, std::hypot(u - x, v - y));
        }
    return best;
}

// Every pixel within distance < r of (cx, cy), the ring included, lies in the support.
bool disc_fits(const FloatMap& inside, int cx, int cy, double r) {
    for (int v = -1; v <= inside.height(); ++v)
        for (int u = -1; u <= inside.width(); ++u) {
            if (std::hypot(u - cx, v - cy) >= r) continue;
            const bool in_image = u >= 0 && v >= 0 && u < inside.width() && v < inside.height();
            if (!in_image || inside.at(u, v) < 0.5f) return false;
        }
    return true;
}

FloatMap random_blobs(int w, int h, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    FloatMap m(w, h, 1, 1.0f);
    for (int k = 0; k < 6; ++k) {
        const double cx = u(rng) * w, cy = u(rng) * h, r = 1.0 + u(rng) * 6.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                if (std::hypot(x - cx, y - cy) < r) m.at(x, y) = 0.0f;
    }
    return m;
}

}  // namespace

TEST_CASE("ground plane: normals equal camera up and depth grows toward the horizon") {
    SceneSpec spec;
    spec.width = spec.height = 64;
    spec.object.position = {0.0, 0.0, 1000.0};  // out of view
    spec.object.size = {0.01, 0.01, 0.01};
    const Vec3 up = spec.camera().up;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            const auto hit = trace_scene(spec, spec.camera_position(),
                                         normalize(spec.camera_to_world(spec.camera().unproject(x, y, 1.0))), false);
            REQUIRE(hit.has_value());
            CHECK(hit->normal.y == doctest::Approx(1.0));
        }
    }
    CHECK(up.y == doctest::Approx(-std::cos(spec.pitch_deg * kPi / 180.0)));
    CHECK_THROWS_AS(generate_scene(spec), Error);  // object not visible

    const GeneratedScene s = generate_scene(random_scene_spec(3, 64, 64));
    for (int x = 0; x < 64; ++x) {
        for (int y = 1; y < 64; ++y) {
            if (s.object_mask.at(x, y) >= 0.5f || s.object_mask.at(x, y - 1) >= 0.5f) continue;
            if (s.spec.wall_z) continue;
            CHECK(s.background.depth.at(x, y - 1) > s.background.depth.at(x, y));
        }
    }
}

TEST_CASE("sphere normals match the analytic surface normal") {
    SceneSpec spec;
    spec.width = spec.height = 128;
    spec.object.kind = PrimitiveKind::sphere;
    spec.object.size = {0.4, 0.0, 0.0};
    spec.object.position = {0.0, 0.0, 2.5};
    const GeneratedScene s = generate_scene(spec);
    const Vec3 center = spec.object.position + Vec3{0.0, 0.4, 0.0};
    std::size_t n = 0;
    for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) {
            if (s.object_mask.at(x, y) < 0.5f) continue;
            const Vec3 p = spec.camera_to_world(s.full.camera.unproject(x, y, s.full.depth.at(x, y))) +
                           spec.camera_position();
            const Vec3 expected = normalize(p - center);
            const Vec3 got = spec.camera_to_world(at3(s.full.normals, x, y));
            CHECK(std::acos(std::min(1.0, dot(expected, got))) * 180.0 / kPi < 2.0);
            CHECK(length(p - center) == doctest::Approx(0.4).epsilon(1e-3));
            ++n;
        }
    CHECK(n > 100);
}

TEST_CASE("full and background bundles differ only on the object") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const GeneratedScene s = generate_scene(random_scene_spec(seed, 80, 64));
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 80; ++x) {
                if (s.object_mask.at(x, y) >= 0.5f) continue;
                CHECK(s.full.depth.at(x, y) == s.background.depth.at(x, y));
                for (int c = 0; c < 3; ++c) {
                    CHECK(s.full.normals.at(x, y, c) == s.background.normals.at(x, y, c));
                    CHECK(s.full.albedo.at(x, y, c) == s.background.albedo.at(x, y, c));
                }
            }
        CHECK(s.composite_image == reconstruct_image(s.full.albedo, s.full.shading));
        CHECK(s.background_image == reconstruct_image(s.background.albedo, s.background.shading));
        validate_bundle(s.full);
        validate_bundle(s.background);
    }
}

TEST_CASE("random scene specs are deterministic and place the object in view") {
    for (std::uint64_t seed = 469; seed < 489; ++seed) {
        const SceneSpec a = random_scene_spec(seed);
        CHECK(scene_to_json(a) == scene_to_json(random_scene_spec(seed)));
        CHECK(a.object.position.y == a.ground_height);
        CHECK(a.pitch_deg >= 35.0);
        CHECK(a.pitch_deg <= 50.0);
        const double elev = std::asin(a.light_direction_world.y) * 180.0 / kPi;
        CHECK(elev >= 45.0 - 1e-9);
        CHECK(elev <= 70.0 + 1e-9);
    }
    CHECK(scene_to_json(random_scene_spec(1)) != scene_to_json(random_scene_spec(2)));
}

TEST_CASE("scene json round trip") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SceneSpec s = random_scene_spec(seed);
        SceneSpec r = scene_from_json(scene_to_json(s));
        // the light direction is renormalised on read, which may move the last ulp
        CHECK(length(r.light_direction_world - s.light_direction_world) < 1e-12);
        r.light_direction_world = s.light_direction_world;
        CHECK(scene_to_json(r) == scene_to_json(s));
        CHECK(r.wall_z.has_value() == s.wall_z.has_value());
        CHECK(r.object.kind == s.object.kind);
    }
    CHECK_THROWS_AS(scene_from_json("{not json"), Error);
    CHECK_THROWS_AS(primitive_from_string("torus"), Error);
}

TEST_CASE("write_generated_scene lays out the scene directory") {
    testing::TempDir dir("scene");
    const GeneratedScene s = generate_scene(random_scene_spec(4, 48, 48));
    write_generated_scene(dir.path(), s);
    for (const char* f : {"mask.pfm", "gt_composite.pfm", "gt_background.pfm", "shadow_mask.pfm", "scene.json",
                          "bg/depth.pfm", "bg/image.pfm", "obj/albedo.pfm"})
        CHECK(std::filesystem::exists(dir / f));
    CHECK_FALSE(std::filesystem::exists(dir / "obj/shading.pfm"));
}

TEST_CASE("support region: 14 degree plane accepted, 16 degree plane rejected") {
    const CameraModel cam = testing::ground_plane_bundle(64, 64).camera;
    CHECK(detect_support_region(tilted_normals(64, 64, cam.up, 14.0), cam).accepted);
    const SupportRegion rejected = detect_support_region(tilted_normals(64, 64, cam.up, 16.0), cam);
    CHECK_FALSE(rejected.accepted);
    CHECK(count_on(rejected.mask) == 0);
}

TEST_CASE("support region: full frame centre and radius") {
    const CameraModel cam = testing::ground_plane_bundle(64, 48).camera;
    const SupportRegion r = detect_support_region(tilted_normals(64, 48, cam.up, 0.0), cam);
    CHECK(r.accepted);
    CHECK(r.inscribed_radius == 24.0);
    CHECK(r.center_y == 23);
    CHECK(r.center_x == 23);  // topmost-leftmost of the tied maxima
    CHECK(scaled_min_radius(512) == 75.0);
    CHECK(scaled_min_radius(256) == 37.5);
    CHECK_FALSE(detect_support_region(tilted_normals(64, 48, cam.up, 0.0), cam, 15.0, 24.5).accepted);
}

TEST_CASE("support region follows camera up: a ceiling only counts upside down") {
    const CameraModel cam = testing::ground_plane_bundle(32, 32).camera;
    const FloatMap ceiling = tilted_normals(32, 32, cam.up, 180.0);
    CHECK_FALSE(detect_support_region(ceiling, cam).accepted);
    CameraModel flipped = cam;  // camera rolled by 180 degrees
    flipped.up = cam.up * -1.0;
    CHECK(detect_support_region(ceiling, flipped).accepted);
}

TEST_CASE("distance transform is exact against brute force") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const FloatMap inside = random_blobs(23 + static_cast<int>(seed), 17, seed);
        const FloatMap d = distance_to_outside(inside);
        for (int y = 0; y < inside.height(); ++y)
            for (int x = 0; x < inside.width(); ++x)
                CHECK(d.at(x, y) == doctest::Approx(brute_distance(inside, x, y)).epsilon(1e-6));
    }
}

TEST_CASE("placement admissibility equals the exhaustive overlap check") {
    const CameraModel cam = testing::ground_plane_bundle(40, 30).camera;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const FloatMap inside = random_blobs(40, 30, 100 + seed);
        FloatMap normals(40, 30, 3);
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x)
                for (int c = 0; c < 3; ++c)
                    normals.at(x, y, c) = static_cast<float>(inside.at(x, y) >= 0.5f ? cam.up[c] : (c == 2 ? -1.0 : 0.0));
        const SupportRegion region = detect_support_region(normals, cam, kSupportAngleDeg, 1.0);
        REQUIRE(region.accepted);
        const double R = region.inscribed_radius;
        for (const double r : {0.5, 1.0, 2.0, 3.5, R - 1.0, R - 1e-3, R, R + 1e-3, R + 1.0}) {
            if (r <= 0.0) continue;
            const Placement p = select_placement(region, r);
            CHECK(p.accepted == disc_fits(inside, region.center_x, region.center_y, r));
        }
        // no other centre admits a larger disc
        for (int y = 0; y < 30; ++y)
            for (int x = 0; x < 40; ++x) CHECK_FALSE(disc_fits(inside, x, y, R + 1e-3));
    }
}
