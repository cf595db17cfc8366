#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "icomp/image_ops.hpp"
#include "icomp/masks.hpp"
#include "icomp/scene.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace icomp;

namespace {

GeneratedScene small_scene(int size, PrimitiveKind kind) {
    SceneSpec spec;
    spec.width = spec.height = size;
    spec.pitch_deg = 40.0;
    spec.object.kind = kind;
    spec.object.size = kind == PrimitiveKind::sphere ? Vec3{0.3, 0, 0} : Vec3{0.5, 0.6, 0.4};
    spec.object.position = {0.0, 0.0, 1.6};
    spec.object.yaw_deg = 20.0;
    return generate_scene(spec);
}

}  // namespace

TEST_CASE("training mask defaults") {
    const TrainingMaskConfig cfg;
    CHECK(cfg.p_shapes == 0.60);
    CHECK(cfg.p_remove_all == 0.30);
    CHECK(cfg.p_keep_all == 0.10);
    CHECK(kDefaultLambda == 1.0);
    CHECK(kDefaultSeed == 469);
}

TEST_CASE("training mask is deterministic per seed") {
    for (std::uint64_t seed : {0ull, 1ull, 469ull, 123456789ull}) {
        const auto a = sample_training_mask(64, 48, seed);
        const auto b = sample_training_mask(64, 48, seed);
        CHECK(a.mask == b.mask);
        CHECK(a.branch == b.branch);
    }
}

TEST_CASE("training mask branches match their content") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto t = sample_training_mask(40, 30, seed);
        const std::size_t on = count_on(t.mask);
        switch (t.branch) {
            case TrainingMaskBranch::keep_all: CHECK(on == t.mask.pixel_count()); break;
            case TrainingMaskBranch::remove_all: CHECK(on == 0); break;
            case TrainingMaskBranch::shapes:
                CHECK(on < t.mask.pixel_count());
                CHECK(on > 0);
                break;
        }
    }
}

TEST_CASE("single rectangle or circle spans 10-50% of the image") {
    TrainingMaskConfig cfg;
    cfg.min_shapes = cfg.max_shapes = 1;
    int seen = 0;
    for (std::uint64_t seed = 0; seen < 100 && seed < 1000; ++seed) {
        const auto t = sample_training_mask(200, 100, seed, cfg);
        if (t.branch != TrainingMaskBranch::shapes) continue;
        ++seen;
        int x0 = 1 << 30, x1 = -1, y0 = 1 << 30, y1 = -1;
        for (int y = 0; y < 100; ++y)
            for (int x = 0; x < 200; ++x)
                if (t.mask.at(x, y) < 0.5f) {
                    x0 = std::min(x0, x);
                    x1 = std::max(x1, x);
                    y0 = std::min(y0, y);
                    y1 = std::max(y1, y);
                }
        const int span_x = x1 - x0 + 1;
        const int span_y = y1 - y0 + 1;
        // circles use the smaller dimension for both axes
        CHECK(span_x >= 10 - 1);
        CHECK(span_x <= 100 + 1);
        CHECK(span_y >= 10 - 1);
        CHECK(span_y <= 50 + 1);
    }
    CHECK(seen == 100);
}

TEST_CASE("inference mask: single point object masks only itself") {
    auto b = testing::ground_plane_bundle(32, 32);
    FloatMap obj(32, 32, 1, 0.0f);
    obj.at(16, 20) = 1.0f;
    const InferenceMask m = build_inference_shading_mask(obj, b.depth, b.camera, {});
    CHECK(m.radius == 0.0);
    CHECK(count_on(m.mask) == 32 * 32 - 1);
    CHECK(m.mask.at(16, 20) == 0.0f);
}

TEST_CASE("inference mask: empty object mask is an error") {
    auto b = testing::ground_plane_bundle(16, 16);
    try {
        build_inference_shading_mask(FloatMap(16, 16, 1, 0.0f), b.depth, b.camera, {});
        FAIL("expected EmptyMask");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::EmptyMask);
    }
    MaskParams bad;
    bad.lambda = 0.0;
    FloatMap obj(16, 16, 1, 0.0f);
    obj.at(3, 3) = 1.0f;
    CHECK_THROWS_AS(build_inference_shading_mask(obj, b.depth, b.camera, bad), Error);
}

TEST_CASE("inference mask agrees exactly with the brute-force oracle") {
    for (const auto kind : {PrimitiveKind::box, PrimitiveKind::sphere, PrimitiveKind::cylinder}) {
        const GeneratedScene s = small_scene(64, kind);
        for (const double lambda : {0.5, 1.0, 1.5}) {
            MaskParams p;
            p.lambda = lambda;
            const auto m = build_inference_shading_mask(s.object_mask, s.full.depth, s.full.camera, p);
            CHECK(m.mask == testing::brute_force_mask(s.object_mask, s.full.depth, s.full.camera, lambda));
        }
    }
}

TEST_CASE("inference mask is monotone in lambda and covers the object") {
    const GeneratedScene s = small_scene(96, PrimitiveKind::box);
    FloatMap prev;
    for (const double lambda : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        MaskParams p;
        p.lambda = lambda;
        const auto m = build_inference_shading_mask(s.object_mask, s.full.depth, s.full.camera, p);
        for (std::size_t i = 0; i < m.mask.size(); ++i) {
            if (s.object_mask.data()[i] >= 0.5f) CHECK(m.mask.data()[i] == 0.0f);
            if (!prev.empty() && prev.data()[i] == 0.0f) CHECK(m.mask.data()[i] == 0.0f);
        }
        prev = m.mask;
    }
}

TEST_CASE("inference mask: pixels directly above the object are never masked") {
    // Level camera in a low room: floor 1 m below, ceiling 0.4 m above.
    const int w = 80, h = 80;
    IntrinsicBundle b;
    b.camera = CameraModel::for_size(w, h, 90.0);
    b.depth = FloatMap(w, h, 1);
    const double f = b.camera.focal();
    FloatMap obj(w, h, 1, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double ry = (y - b.camera.principal_y()) / f;
            b.depth.at(x, y) = static_cast<float>(ry > 1e-3 ? 1.0 / ry : (ry < -1e-3 ? 0.4 / -ry : 50.0));
        }
    }
    // A fronto-parallel slab 1 m tall standing on the floor at z in [1.2, 1.5].
    for (int y = 0; y < h; ++y) {
        for (int x = 30; x < 50; ++x) {
            const double z = 1.2 + 0.3 * (x - 30) / 19.0;
            const double Y = (y - b.camera.principal_y()) / f * z;
            if (Y >= 0.0 && Y <= 1.0) {
                obj.at(x, y) = 1.0f;
                b.depth.at(x, y) = static_cast<float>(z);
            }
        }
    }
    const auto m = build_inference_shading_mask(obj, b.depth, b.camera, {});
    CHECK(m.radius == doctest::Approx(1.0).epsilon(0.05));
    const FloatMap pos = unproject_depth(b.depth, b.camera);
    int above = 0, beside = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double X = pos.at(x, y, 0), Y = pos.at(x, y, 1), Z = pos.at(x, y, 2);
            if (std::abs(Y + 0.4) > 1e-4) continue;  // ceiling pixels only
            const bool inside = X >= m.extent.h0_min && X <= m.extent.h0_max && Z >= m.extent.h1_min &&
                                Z <= m.extent.h1_max;
            if (inside) {
                ++above;
                CHECK(m.mask.at(x, y) == 1.0f);
            } else if (std::abs(X - m.extent.h0_max) < 0.2 && Z > 1.2 && Z < 1.5) {
                ++beside;  // within 0.4 + 0.2 of the top edge, so inside d
                CHECK(m.mask.at(x, y) == 0.0f);
            }
        }
    }
    CHECK(above > 0);
    CHECK(beside > 0);
    CHECK(m.mask == testing::brute_force_mask(obj, b.depth, b.camera, 1.0));
}

TEST_CASE("inference mask parallel equals serial") {
    const GeneratedScene s = small_scene(128, PrimitiveKind::cylinder);
    const auto a = build_inference_shading_mask(s.object_mask, s.full.depth, s.full.camera, {}, Exec::serial);
    const auto b = build_inference_shading_mask(s.object_mask, s.full.depth, s.full.camera, {}, Exec::parallel);
    CHECK(a.mask == b.mask);
}

TEST_CASE("feather_object_mask") {
    const FloatMap ones = feather_object_mask(FloatMap(20, 20, 1, 1.0f));
    for (const float v : ones.data()) CHECK(v == doctest::Approx(1.0f).epsilon(1e-6));

    FloatMap disk(101, 101, 1, 0.0f);
    for (int y = 0; y < 101; ++y)
        for (int x = 0; x < 101; ++x)
            if ((x - 50) * (x - 50) + (y - 50) * (y - 50) <= 40 * 40) disk.at(x, y) = 1.0f;
    const FloatMap f = feather_object_mask(disk);
    for (int y = 0; y < 101; ++y) {
        for (int x = 0; x < 101; ++x) {
            // the separable 15x15 kernel sees exactly the square window around the pixel
            int in_window = 0;
            for (int dy = -7; dy <= 7; ++dy)
                for (int dx = -7; dx <= 7; ++dx)
                    in_window += disk.at(std::clamp(x + dx, 0, 100), std::clamp(y + dy, 0, 100)) > 0.5f;
            const float v = f.at(x, y);
            CHECK(v >= 0.0f);
            CHECK(v <= 1.0f);
            if (in_window == 15 * 15) CHECK(v == doctest::Approx(1.0f).epsilon(1e-6));
            if (in_window == 0) CHECK(v == 0.0f);
        }
    }
    // the band is non-trivial: some pixel near the edge is strictly between
    CHECK(f.at(90, 50) > 0.0f);
    CHECK(f.at(90, 50) < 1.0f);
}
