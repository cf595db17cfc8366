#include <doctest.h>

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "icomp/intrinsics.hpp"
#include "icomp/pfm.hpp"
#include "support.hpp"

using namespace icomp;
using icomp::testing::random_map;
using icomp::testing::TempDir;

namespace {

IntrinsicBundle small_bundle(int w = 6, int h = 4) {
    IntrinsicBundle b;
    b.camera = CameraModel::for_size(w, h);
    b.depth = FloatMap(w, h, 1, 2.0f);
    b.normals = FloatMap(w, h, 3, 0.0f);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) b.normals.at(x, y, 1) = -1.0f;
    b.albedo = random_map(w, h, 3, 1, 0.1f, 1.0f);
    b.shading = random_map(w, h, 3, 2, 0.0f, 3.0f);
    return b;
}

bool rejects(const IntrinsicBundle& b) {
    try {
        validate_bundle(b);
    } catch (const Error& e) {
        return e.code() == ErrorCode::InvalidBundle;
    }
    return false;
}

}  // namespace

TEST_CASE("derive_shading examples") {
    FloatMap img(3, 1, 3), alb(3, 1, 3);
    for (int c = 0; c < 3; ++c) {
        img.at(0, 0, c) = 0.5f;
        alb.at(0, 0, c) = 0.5f;
        img.at(1, 0, c) = 0.2f;
        alb.at(1, 0, c) = 0.0f;
        alb.at(2, 0, c) = 0.3f;
    }
    const FloatMap s = derive_shading(img, alb);
    for (int c = 0; c < 3; ++c) {
        CHECK(s.at(0, 0, c) == 1.0f);
        CHECK(s.at(1, 0, c) == doctest::Approx(0.2 / 1e-4).epsilon(1e-6));
        CHECK(s.at(2, 0, c) == 0.0f);
    }
    CHECK(kAlbedoEpsilon == 1e-4f);
    CHECK_THROWS_AS(derive_shading(FloatMap(2, 2, 3), FloatMap(2, 3, 3)), Error);
}

TEST_CASE("reconstruct_image inverts derive_shading") {
    const FloatMap alb = random_map(32, 24, 3, 9, 0.1f, 1.0f);
    const FloatMap img = random_map(32, 24, 3, 10);
    const FloatMap back = reconstruct_image(alb, derive_shading(img, alb));
    double se = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double d = back.data()[i] - img.data()[i];
        se += d * d;
    }
    CHECK(std::sqrt(se / img.size()) < 1e-6);

    // albedo 1 -> image equals shading
    const FloatMap shading = random_map(5, 5, 3, 4, 0.0f, 4.0f);
    CHECK(reconstruct_image(FloatMap(5, 5, 3, 1.0f), shading) == shading);

    // shading recovered from its own reconstruction
    const FloatMap s_ref = random_map(32, 24, 3, 12, 0.0f, 3.0f);
    const FloatMap s2 = derive_shading(reconstruct_image(alb, s_ref), alb);
    for (std::size_t i = 0; i < s2.size(); ++i) CHECK(s2.data()[i] == doctest::Approx(s_ref.data()[i]).epsilon(1e-6));
}

TEST_CASE("camera focal length and unprojection") {
    const CameraModel cam = CameraModel::for_size(512, 512);
    CHECK(cam.fov_deg == 50.0);
    CHECK(cam.focal() == doctest::Approx(256.0 / std::tan(25.0 * M_PI / 180.0)));
    CHECK(cam.focal() == doctest::Approx(549.0).epsilon(1e-3));

    const Vec3 c = cam.unproject(cam.principal_x(), cam.principal_y(), 3.0);
    CHECK(c.x == 0.0);
    CHECK(c.y == 0.0);
    CHECK(c.z == 3.0);
    const Vec3 r = cam.unproject(cam.principal_x() + cam.focal(), cam.principal_y(), 1.7);
    CHECK(r.x == doctest::Approx(1.7));

    double u = 0.0, v = 0.0;
    cam.project(cam.unproject(100.25, 40.5, 2.5), u, v);
    CHECK(u == doctest::Approx(100.25));
    CHECK(v == doctest::Approx(40.5));
}

TEST_CASE("unproject_depth is linear in depth and rejects non-positive depth") {
    const CameraModel cam = CameraModel::for_size(8, 6);
    const FloatMap d = random_map(8, 6, 1, 3, 0.5f, 4.0f);
    FloatMap d2 = d;
    for (float& v : d2.data()) v *= 2.0f;
    const FloatMap p = unproject_depth(d, cam);
    const FloatMap p2 = unproject_depth(d2, cam);
    for (std::size_t i = 0; i < p.size(); ++i) CHECK(p2.data()[i] == doctest::Approx(2.0 * p.data()[i]).epsilon(1e-6));
    FloatMap bad = d;
    bad.at(3, 3) = 0.0f;
    CHECK_THROWS_AS(unproject_depth(bad, cam), Error);
}

TEST_CASE("validate_bundle") {
    CHECK_NOTHROW(validate_bundle(small_bundle()));
    {
        auto b = small_bundle();
        b.depth.at(1, 1) = -1.0f;
        CHECK(rejects(b));
    }
    {
        auto b = small_bundle();
        b.normals.at(2, 2, 1) = -0.9f;
        CHECK(rejects(b));
    }
    {
        auto b = small_bundle();
        b.normals.at(2, 2, 1) = -1.0005f;  // inside the 1e-3 tolerance
        CHECK_FALSE(rejects(b));
    }
    {
        auto b = small_bundle();
        b.albedo.at(0, 0, 2) = 1.5f;
        CHECK(rejects(b));
    }
    {
        auto b = small_bundle();
        b.shading.at(0, 0, 0) = -0.1f;
        CHECK(rejects(b));
    }
    {
        auto b = small_bundle();
        b.albedo = FloatMap(5, 4, 3);
        CHECK_THROWS(validate_bundle(b));
    }
    {
        // values outside a region are ignored
        auto b = small_bundle();
        b.depth.at(0, 0) = 0.0f;
        FloatMap region(6, 4, 1, 1.0f);
        region.at(0, 0) = 0.0f;
        CHECK_NOTHROW(validate_bundle(b, &region));
    }
}

TEST_CASE("bundle directory round trip") {
    TempDir dir("bundle");
    auto b = small_bundle(7, 5);
    b.roughness = FloatMap(7, 5, 1, 0.4f);
    b.camera.fov_deg = 60.0;
    b.camera.up = Vec3{0.0, -0.8, -0.6};
    write_bundle(dir.path(), b);
    const IntrinsicBundle back = read_bundle(dir.path());
    CHECK(back.depth == b.depth);
    CHECK(back.normals == b.normals);
    CHECK(back.albedo == b.albedo);
    CHECK(back.shading == b.shading);
    REQUIRE(back.roughness.has_value());
    CHECK(*back.roughness == *b.roughness);
    CHECK_FALSE(back.metallic.has_value());
    CHECK(back.camera.fov_deg == 60.0);
    CHECK(back.camera.up.y == doctest::Approx(-0.8));

    std::ifstream in(dir / "manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j.at("fov_deg").get<double>() == 60.0);
    CHECK(j.at("width").get<int>() == 7);
    CHECK(j.at("height").get<int>() == 5);
}

TEST_CASE("object bundles may omit shading") {
    TempDir dir("objbundle");
    write_bundle(dir.path(), small_bundle(), /*include_shading=*/false);
    CHECK_FALSE(std::filesystem::exists(dir / "shading.pfm"));
    CHECK_THROWS_AS(read_bundle(dir.path()), Error);
    const IntrinsicBundle b = read_bundle(dir.path(), /*require_shading=*/false);
    for (const float v : b.shading.data()) CHECK(v == 0.0f);
}

TEST_CASE("manifest with default keys only") {
    TempDir dir("manifest");
    {
        std::ofstream out(dir / "manifest.json");
        out << R"({"fov_deg": 50.0, "width": 4, "height": 3})";
    }
    const CameraModel cam = read_manifest(dir / "manifest.json");
    CHECK(cam.width == 4);
    CHECK(cam.principal_x() == 1.5);
    CHECK(cam.up.y == -1.0);
    {
        std::ofstream out(dir / "bad.json");
        out << R"({"fov_deg": 190.0, "width": 4, "height": 3})";
    }
    CHECK_THROWS_AS(read_manifest(dir / "bad.json"), Error);
}
