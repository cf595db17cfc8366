#include "icomp/intrinsics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "icomp/pfm.hpp"

namespace icomp {

namespace fs = std::filesystem;

CameraModel CameraModel::for_size(int width, int height, double fov_deg) {
    CameraModel cam;
    cam.width = width;
    cam.height = height;
    cam.fov_deg = fov_deg;
    return cam;
}

double CameraModel::focal() const {
    return (width * 0.5) / std::tan(fov_deg * std::numbers::pi / 360.0);
}

Vec3 CameraModel::unproject(double u, double v, double z) const {
    const double f = focal();
    return {(u - principal_x()) * z / f, (v - principal_y()) * z / f, z};
}

void CameraModel::project(const Vec3& p, double& u, double& v) const {
    const double f = focal();
    u = p.x * f / p.z + principal_x();
    v = p.y * f / p.z + principal_y();
}

void CameraModel::validate() const {
    if (!(fov_deg > 0.0 && fov_deg < 180.0)) throw Error(ErrorCode::InvalidArgument, "camera FOV must lie in (0, 180)");
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "camera resolution must be positive");
    if (std::abs(length(up) - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "camera up vector must be unit length");
}

namespace {

void bundle_fail(const std::string& what) { throw Error(ErrorCode::InvalidBundle, what); }

void check_layer(const FloatMap& map, const FloatMap& ref, int channels, const char* name) {
    if (map.empty()) bundle_fail(std::string(name) + " is missing");
    if (map.channels() != channels) bundle_fail(std::string(name) + " must have " + std::to_string(channels) + " channels");
    if (!map.same_size(ref)) bundle_fail(std::string(name) + " size differs from depth");
}

}  // namespace

void validate_bundle(const IntrinsicBundle& b, const FloatMap* region, BundleTolerance tol) {
    check_layer(b.depth, b.depth, 1, "depth");
    check_layer(b.normals, b.depth, 3, "normals");
    check_layer(b.albedo, b.depth, 3, "albedo");
    check_layer(b.shading, b.depth, 3, "shading");
    if (b.roughness) check_layer(*b.roughness, b.depth, 1, "roughness");
    if (b.metallic) check_layer(*b.metallic, b.depth, 1, "metallic");
    if (region) require_same_size(*region, b.depth, "bundle region mask");
    b.camera.validate();
    if (b.camera.width != b.width() || b.camera.height != b.height()) bundle_fail("camera resolution differs from maps");

    for (int y = 0; y < b.height(); ++y) {
        for (int x = 0; x < b.width(); ++x) {
            if (region && region->at(x, y) < 0.5f) continue;
            const auto where = " at (" + std::to_string(x) + "," + std::to_string(y) + ")";
            if (!(b.depth.at(x, y) > 0.0f)) bundle_fail("non-positive depth" + where);
            double n2 = 0.0;
            for (int c = 0; c < 3; ++c) {
                n2 += static_cast<double>(b.normals.at(x, y, c)) * b.normals.at(x, y, c);
                const float a = b.albedo.at(x, y, c);
                if (a < 0.0f || a > 1.0f) bundle_fail("albedo outside [0,1]" + where);
                if (b.shading.at(x, y, c) < 0.0f) bundle_fail("negative shading" + where);
            }
            if (std::abs(std::sqrt(n2) - 1.0) > tol.normal_length) bundle_fail("normal is not unit length" + where);
            for (const auto* opt : {&b.roughness, &b.metallic}) {
                if (*opt) {
                    const float v = (*opt)->at(x, y);
                    if (v < 0.0f || v > 1.0f) bundle_fail("material channel outside [0,1]" + where);
                }
            }
        }
    }
}

FloatMap derive_shading(const FloatMap& image, const FloatMap& albedo, float eps) {
    require_same_size(image, albedo, "derive_shading", true);
    FloatMap out(image.width(), image.height(), image.channels());
    const auto x = image.data();
    const auto a = albedo.data();
    auto s = out.data();
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::max(0.0f, x[i] / std::max(a[i], eps));
    return out;
}

FloatMap reconstruct_image(const FloatMap& albedo, const FloatMap& shading) {
    require_same_size(albedo, shading, "reconstruct_image", true);
    FloatMap out(albedo.width(), albedo.height(), albedo.channels());
    const auto a = albedo.data();
    const auto s = shading.data();
    auto x = out.data();
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = a[i] * s[i];
    return out;
}

FloatMap unproject_depth(const FloatMap& depth, const CameraModel& camera) {
    if (depth.channels() != 1) throw Error(ErrorCode::InvalidArgument, "depth must be single-channel");
    const double f = camera.focal();
    const double cx = camera.principal_x();
    const double cy = camera.principal_y();
    FloatMap out(depth.width(), depth.height(), 3);
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            const float d = depth.at(u, v);
            if (!(d > 0.0f)) {
                throw Error(ErrorCode::InvalidArgument,
                            "non-positive depth at (" + std::to_string(u) + "," + std::to_string(v) + ")");
            }
            out.at(u, v, 0) = static_cast<float>((u - cx) / f * d);
            out.at(u, v, 1) = static_cast<float>((v - cy) / f * d);
            out.at(u, v, 2) = d;
        }
    }
    return out;
}

void write_manifest(const fs::path& file, const CameraModel& camera) {
    nlohmann::ordered_json j;
    j["fov_deg"] = camera.fov_deg;
    j["width"] = camera.width;
    j["height"] = camera.height;
    if (camera.cx) j["cx"] = *camera.cx;
    if (camera.cy) j["cy"] = *camera.cy;
    if (camera.up != Vec3{0.0, -1.0, 0.0}) j["up"] = {camera.up.x, camera.up.y, camera.up.z};
    std::ofstream out(file);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
    out << j.dump(2) << '\n';
}

CameraModel read_manifest(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + file.string());
    try {
        const auto j = nlohmann::json::parse(in);
        CameraModel cam;
        cam.fov_deg = j.at("fov_deg").get<double>();
        cam.width = j.at("width").get<int>();
        cam.height = j.at("height").get<int>();
        if (j.contains("cx")) cam.cx = j["cx"].get<double>();
        if (j.contains("cy")) cam.cy = j["cy"].get<double>();
        if (j.contains("up")) {
            const auto u = j["up"].get<std::vector<double>>();
            if (u.size() != 3) throw Error(ErrorCode::InvalidBundle, "manifest 'up' must have 3 entries");
            cam.up = normalize(Vec3{u[0], u[1], u[2]});
        }
        cam.validate();
        return cam;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidBundle, file.string() + ": " + e.what());
    }
}

void write_bundle(const fs::path& dir, const IntrinsicBundle& b, bool include_shading) {
    fs::create_directories(dir);
    write_pfm(dir / "depth.pfm", b.depth);
    write_pfm(dir / "normals.pfm", b.normals);
    write_pfm(dir / "albedo.pfm", b.albedo);
    if (include_shading) write_pfm(dir / "shading.pfm", b.shading);
    if (b.roughness) write_pfm(dir / "roughness.pfm", *b.roughness);
    if (b.metallic) write_pfm(dir / "metallic.pfm", *b.metallic);
    write_manifest(dir / "manifest.json", b.camera);
}

IntrinsicBundle read_bundle(const fs::path& dir, bool require_shading) {
    if (!fs::is_directory(dir)) throw Error(ErrorCode::Io, "bundle directory not found: " + dir.string());
    IntrinsicBundle b;
    b.camera = read_manifest(dir / "manifest.json");
    b.depth = read_pfm(dir / "depth.pfm");
    b.normals = read_pfm(dir / "normals.pfm");
    b.albedo = read_pfm(dir / "albedo.pfm");
    if (fs::exists(dir / "shading.pfm")) {
        b.shading = read_pfm(dir / "shading.pfm");
    } else if (require_shading) {
        throw Error(ErrorCode::InvalidBundle, "bundle lacks shading.pfm: " + dir.string());
    } else {
        b.shading = FloatMap(b.depth.width(), b.depth.height(), 3);
    }
    if (fs::exists(dir / "roughness.pfm")) b.roughness = read_pfm(dir / "roughness.pfm");
    if (fs::exists(dir / "metallic.pfm")) b.metallic = read_pfm(dir / "metallic.pfm");
    return b;
}

}  // namespace icomp
