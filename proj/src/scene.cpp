#include "icomp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>

#include <json.hpp>

#include "icomp/pfm.hpp"

namespace icomp {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kTMin = 1e-9;

}  // namespace

const char* to_string(PrimitiveKind kind) {
    switch (kind) {
        case PrimitiveKind::box: return "box";
        case PrimitiveKind::sphere: return "sphere";
        case PrimitiveKind::cylinder: return "cylinder";
    }
    return "box";
}

PrimitiveKind primitive_from_string(const std::string& name) {
    if (name == "box") return PrimitiveKind::box;
    if (name == "sphere") return PrimitiveKind::sphere;
    if (name == "cylinder") return PrimitiveKind::cylinder;
    throw Error(ErrorCode::InvalidArgument, "unknown primitive '" + name + "'");
}

double ObjectSpec::height() const {
    switch (kind) {
        case PrimitiveKind::box: return size.y;
        case PrimitiveKind::sphere: return 2.0 * size.x;
        case PrimitiveKind::cylinder: return size.y;
    }
    return 0.0;
}

// Camera basis in world coordinates: x right, y image-down, z forward.
Vec3 SceneSpec::world_to_camera(const Vec3& v) const {
    const double p = pitch_deg * kDeg;
    const Vec3 down{0.0, -std::cos(p), -std::sin(p)};
    const Vec3 forward{0.0, -std::sin(p), std::cos(p)};
    return {v.x, dot(v, down), dot(v, forward)};
}

Vec3 SceneSpec::camera_to_world(const Vec3& v) const {
    const double p = pitch_deg * kDeg;
    const Vec3 down{0.0, -std::cos(p), -std::sin(p)};
    const Vec3 forward{0.0, -std::sin(p), std::cos(p)};
    return Vec3{1.0, 0.0, 0.0} * v.x + down * v.y + forward * v.z;
}

CameraModel SceneSpec::camera() const {
    CameraModel cam = CameraModel::for_size(width, height, fov_deg);
    cam.up = normalize(world_to_camera({0.0, 1.0, 0.0}));
    return cam;
}

LightSpec SceneSpec::light() const {
    LightSpec l;
    l.direction = normalize(world_to_camera(normalize(light_direction_world)));
    l.intensity = light_intensity;
    l.ambient = ambient;
    return l;
}

namespace {

void keep_nearest(std::optional<Hit>& best, double t, const Vec3& normal, const Rgb& albedo, bool object) {
    if (t > kTMin && (!best || t < best->t)) best = Hit{t, normal, albedo, object};
}

Vec3 rotate_y(const Vec3& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
}

std::optional<Hit> hit_box(const ObjectSpec& obj, const Vec3& o_world, const Vec3& d_world) {
    const double yaw = obj.yaw_deg * kDeg;
    const Vec3 o = rotate_y(o_world - obj.position, -yaw);
    const Vec3 d = rotate_y(d_world, -yaw);
    const double lo[3] = {-0.5 * obj.size.x, 0.0, -0.5 * obj.size.z};
    const double hi[3] = {0.5 * obj.size.x, obj.size.y, 0.5 * obj.size.z};
    double t_near = -std::numeric_limits<double>::infinity();
    double t_far = std::numeric_limits<double>::infinity();
    int axis = -1;
    double sign = 0.0;
    for (int i = 0; i < 3; ++i) {
        if (std::abs(d[i]) < 1e-15) {
            if (o[i] < lo[i] || o[i] > hi[i]) return std::nullopt;
            continue;
        }
        double t0 = (lo[i] - o[i]) / d[i];
        double t1 = (hi[i] - o[i]) / d[i];
        double s = -1.0;
        if (t0 > t1) {
            std::swap(t0, t1);
            s = 1.0;
        }
        if (t0 > t_near) {
            t_near = t0;
            axis = i;
            sign = s;
        }
        t_far = std::min(t_far, t1);
    }
    if (axis < 0 || t_near > t_far || t_near <= kTMin) return std::nullopt;
    Vec3 n{0.0, 0.0, 0.0};
    if (axis == 0) n.x = sign;
    if (axis == 1) n.y = sign;
    if (axis == 2) n.z = sign;
    return Hit{t_near, rotate_y(n, yaw), obj.albedo, true};
}

std::optional<Hit> hit_sphere(const ObjectSpec& obj, const Vec3& o, const Vec3& d) {
    const double r = obj.size.x;
    const Vec3 c = obj.position + Vec3{0.0, r, 0.0};
    const Vec3 oc = o - c;
    const double b = dot(oc, d);
    const double cc = dot(oc, oc) - r * r;
    const double disc = b * b - cc;
    if (disc < 0.0) return std::nullopt;
    const double t = -b - std::sqrt(disc);
    if (t <= kTMin) return std::nullopt;
    return Hit{t, normalize(o + d * t - c), obj.albedo, true};
}

std::optional<Hit> hit_cylinder(const ObjectSpec& obj, const Vec3& o, const Vec3& d) {
    const double r = obj.size.x;
    const double y0 = obj.position.y;
    const double y1 = obj.position.y + obj.size.y;
    std::optional<Hit> best;
    const double ox = o.x - obj.position.x, oz = o.z - obj.position.z;
    const double a = d.x * d.x + d.z * d.z;
    if (a > 1e-15) {
        const double b = ox * d.x + oz * d.z;
        const double c = ox * ox + oz * oz - r * r;
        const double disc = b * b - a * c;
        if (disc >= 0.0) {
            const double t = (-b - std::sqrt(disc)) / a;
            const double y = o.y + d.y * t;
            if (y >= y0 && y <= y1) keep_nearest(best, t, normalize(Vec3{ox + d.x * t, 0.0, oz + d.z * t}), obj.albedo, true);
        }
    }
    if (std::abs(d.y) > 1e-15) {
        for (const double yc : {y0, y1}) {
            const double t = (yc - o.y) / d.y;
            const double px = ox + d.x * t, pz = oz + d.z * t;
            if (px * px + pz * pz <= r * r) keep_nearest(best, t, Vec3{0.0, yc == y1 ? 1.0 : -1.0, 0.0}, obj.albedo, true);
        }
    }
    return best;
}

std::optional<Hit> trace_background(const SceneSpec& spec, const Vec3& o, const Vec3& d) {
    std::optional<Hit> best;
    if (d.y < 0.0) keep_nearest(best, (spec.ground_height - o.y) / d.y, {0.0, 1.0, 0.0}, spec.ground_albedo, false);
    if (spec.wall_z && d.z > 0.0) keep_nearest(best, (*spec.wall_z - o.z) / d.z, {0.0, 0.0, -1.0}, spec.wall_albedo, false);
    return best;
}

std::optional<Hit> trace_object(const SceneSpec& spec, const Vec3& o, const Vec3& d) {
    switch (spec.object.kind) {
        case PrimitiveKind::box: return hit_box(spec.object, o, d);
        case PrimitiveKind::sphere: return hit_sphere(spec.object, o, d);
        case PrimitiveKind::cylinder: return hit_cylinder(spec.object, o, d);
    }
    return std::nullopt;
}

void validate_spec(const SceneSpec& spec) {
    if (spec.width < 8 || spec.height < 8) throw Error(ErrorCode::InvalidArgument, "scene resolution too small");
    if (spec.camera_height <= spec.ground_height) throw Error(ErrorCode::InvalidArgument, "camera must be above the ground");
    if (spec.object.position.y < spec.ground_height - 1e-12) {
        throw Error(ErrorCode::InvalidArgument, "object must rest on or above the ground");
    }
    if (!(spec.object.height() > 0.0)) throw Error(ErrorCode::InvalidArgument, "object must have positive size");
    spec.camera().validate();
    spec.light().validate();
}

}  // namespace

std::optional<Hit> trace_scene(const SceneSpec& spec, const Vec3& origin, const Vec3& dir, bool with_object) {
    std::optional<Hit> best = trace_background(spec, origin, dir);
    if (with_object) {
        if (auto obj = trace_object(spec, origin, dir); obj && (!best || obj->t < best->t)) best = obj;
    }
    return best;
}

GeneratedScene generate_scene(const SceneSpec& spec, const VisibilityParams& vis) {
    validate_spec(spec);
    const CameraModel cam = spec.camera();
    const int w = spec.width, h = spec.height;
    const double f = cam.focal();
    const Vec3 origin = spec.camera_position();

    GeneratedScene out;
    out.spec = spec;
    auto init = [&](IntrinsicBundle& b) {
        b.camera = cam;
        b.depth = FloatMap(w, h, 1, 1.0f);
        b.normals = FloatMap(w, h, 3);
        b.albedo = FloatMap(w, h, 3);
        b.shading = FloatMap(w, h, 3);
    };
    init(out.background);
    init(out.full);
    out.object_mask = FloatMap(w, h, 1, 0.0f);

    auto store = [&](IntrinsicBundle& b, int x, int y, const Hit& hit, const Vec3& dir_cam) {
        b.depth.at(x, y) = static_cast<float>(hit.t * dir_cam.z);
        const Vec3 n = normalize(spec.world_to_camera(hit.normal));
        b.normals.at(x, y, 0) = static_cast<float>(n.x);
        b.normals.at(x, y, 1) = static_cast<float>(n.y);
        b.normals.at(x, y, 2) = static_cast<float>(n.z);
        for (int c = 0; c < 3; ++c) b.albedo.at(x, y, c) = static_cast<float>(hit.albedo[c]);
    };

    std::size_t object_pixels = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir_cam = normalize(Vec3{(x - cam.principal_x()) / f, (y - cam.principal_y()) / f, 1.0});
            const Vec3 dir = spec.camera_to_world(dir_cam);
            const auto bg = trace_background(spec, origin, dir);
            if (!bg) {
                throw Error(ErrorCode::InvalidArgument, "scene leaves pixel (" + std::to_string(x) + "," +
                                                            std::to_string(y) + ") empty; add a wall or pitch down");
            }
            store(out.background, x, y, *bg, dir_cam);
            const auto obj = trace_object(spec, origin, dir);
            if (obj && obj->t < bg->t) {
                store(out.full, x, y, *obj, dir_cam);
                out.object_mask.at(x, y) = 1.0f;
                ++object_pixels;
            } else {
                store(out.full, x, y, *bg, dir_cam);
            }
        }
    }
    if (object_pixels == 0) throw Error(ErrorCode::InvalidArgument, "object is outside the camera frustum");

    const LightSpec light = spec.light();
    out.background.shading = analytic_shading(out.background, FloatMap(), light, vis);
    out.full.shading = analytic_shading(out.full, FloatMap(), light, vis);
    out.background_image = reconstruct_image(out.background.albedo, out.background.shading);
    out.composite_image = reconstruct_image(out.full.albedo, out.full.shading);

    const FloatMap vis_bg = shadow_visibility(unproject_depth(out.background.depth, cam), out.background.depth, cam, light, vis);
    const FloatMap vis_full = shadow_visibility(unproject_depth(out.full.depth, cam), out.full.depth, cam, light, vis);
    out.shadow_mask = FloatMap(w, h, 1, 0.0f);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (out.object_mask.at(x, y) >= 0.5f) continue;
            const Vec3 n{out.background.normals.at(x, y, 0), out.background.normals.at(x, y, 1),
                         out.background.normals.at(x, y, 2)};
            if (dot(n, light.direction) > 0.0 && vis_bg.at(x, y) > 0.5f && vis_full.at(x, y) < 0.5f) {
                out.shadow_mask.at(x, y) = 1.0f;
            }
        }
    }
    return out;
}

SceneSpec random_scene_spec(std::uint64_t seed, int width, int height) {
    std::mt19937_64 engine(seed ^ 0x5eedc0ffee123457ull);
    auto uni = [&](double lo, double hi) { return lo + (hi - lo) * (static_cast<double>(engine() >> 11) * 0x1.0p-53); };

    SceneSpec spec;
    spec.width = width;
    spec.height = height;
    spec.pitch_deg = uni(35.0, 50.0);
    spec.camera_height = uni(1.3, 1.8);
    if (uni(0.0, 1.0) < 0.5) spec.wall_z = uni(5.0, 8.0);
    spec.ground_albedo = {uni(0.35, 0.75), uni(0.35, 0.75), uni(0.35, 0.75)};
    spec.wall_albedo = {uni(0.5, 0.9), uni(0.5, 0.9), uni(0.5, 0.9)};

    const double kind_draw = uni(0.0, 3.0);
    ObjectSpec& obj = spec.object;
    obj.kind = kind_draw < 1.0 ? PrimitiveKind::box : (kind_draw < 2.0 ? PrimitiveKind::cylinder : PrimitiveKind::sphere);
    const double size = uni(0.35, 0.7);
    switch (obj.kind) {
        case PrimitiveKind::box: obj.size = {uni(0.5, 1.0) * size, size, uni(0.5, 1.0) * size}; break;
        case PrimitiveKind::sphere: obj.size = {0.5 * size, 0.0, 0.0}; break;
        case PrimitiveKind::cylinder: obj.size = {uni(0.25, 0.45) * size, size, 0.0}; break;
    }
    obj.yaw_deg = uni(-40.0, 40.0);
    obj.albedo = {uni(0.2, 0.9), uni(0.2, 0.9), uni(0.2, 0.9)};

    // Drop the object on the ground point seen near the lower-middle of the frame.
    const CameraModel cam = spec.camera();
    const double u = uni(0.35, 0.65) * (width - 1);
    const double v = uni(0.5, 0.7) * (height - 1);
    const Vec3 dir = spec.camera_to_world(normalize(Vec3{(u - cam.principal_x()) / cam.focal(),
                                                         (v - cam.principal_y()) / cam.focal(), 1.0}));
    const double t = (spec.ground_height - spec.camera_height) / dir.y;
    const Vec3 ground = spec.camera_position() + dir * t;
    obj.position = {ground.x, spec.ground_height, ground.z};
    if (spec.wall_z) spec.wall_z = std::max(*spec.wall_z, ground.z + 2.0);

    // Elevation >= 45 deg keeps the shadow no longer than the object is tall;
    // azimuth away from 0 (light behind the camera) keeps it visible.
    const double elevation = uni(45.0, 70.0) * kDeg;
    const double azimuth = (uni(0.0, 1.0) < 0.5 ? -1.0 : 1.0) * uni(40.0, 160.0) * kDeg;
    spec.light_direction_world = normalize(
        Vec3{std::cos(elevation) * std::sin(azimuth), std::sin(elevation), -std::cos(elevation) * std::cos(azimuth)});
    const double intensity = uni(0.6, 0.75);
    spec.light_intensity = {intensity, intensity * uni(0.97, 1.0), intensity * uni(0.94, 1.0)};
    const double ambient = uni(0.15, 0.3);
    spec.ambient = {ambient, ambient, ambient};
    return spec;
}

std::string scene_to_json(const SceneSpec& s) {
    auto vec = [](const Vec3& v) { return nlohmann::json::array({v.x, v.y, v.z}); };
    auto rgb = [](const Rgb& c) { return nlohmann::json::array({c.r, c.g, c.b}); };
    nlohmann::ordered_json j;
    j["width"] = s.width;
    j["height"] = s.height;
    j["fov_deg"] = s.fov_deg;
    j["pitch_deg"] = s.pitch_deg;
    j["camera_height"] = s.camera_height;
    j["ground_height"] = s.ground_height;
    j["wall_z"] = s.wall_z ? nlohmann::json(*s.wall_z) : nlohmann::json(nullptr);
    j["ground_albedo"] = rgb(s.ground_albedo);
    j["wall_albedo"] = rgb(s.wall_albedo);
    j["object"] = {{"kind", to_string(s.object.kind)},
                   {"size", vec(s.object.size)},
                   {"position", vec(s.object.position)},
                   {"yaw_deg", s.object.yaw_deg},
                   {"albedo", rgb(s.object.albedo)}};
    j["light"] = {{"direction_world", vec(s.light_direction_world)},
                  {"intensity", rgb(s.light_intensity)},
                  {"ambient", rgb(s.ambient)}};
    return j.dump(2);
}

SceneSpec scene_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        auto vec = [](const nlohmann::json& a) { return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
        auto rgb = [](const nlohmann::json& a) { return Rgb{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; };
        SceneSpec s;
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        s.fov_deg = j.at("fov_deg").get<double>();
        s.pitch_deg = j.at("pitch_deg").get<double>();
        s.camera_height = j.at("camera_height").get<double>();
        s.ground_height = j.at("ground_height").get<double>();
        if (!j.at("wall_z").is_null()) s.wall_z = j["wall_z"].get<double>();
        s.ground_albedo = rgb(j.at("ground_albedo"));
        s.wall_albedo = rgb(j.at("wall_albedo"));
        const auto& o = j.at("object");
        s.object.kind = primitive_from_string(o.at("kind").get<std::string>());
        s.object.size = vec(o.at("size"));
        s.object.position = vec(o.at("position"));
        s.object.yaw_deg = o.at("yaw_deg").get<double>();
        s.object.albedo = rgb(o.at("albedo"));
        const auto& l = j.at("light");
        s.light_direction_world = normalize(vec(l.at("direction_world")));
        s.light_intensity = rgb(l.at("intensity"));
        s.ambient = rgb(l.at("ambient"));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad scene json: ") + e.what());
    }
}

void write_generated_scene(const fs::path& dir, const GeneratedScene& scene) {
    fs::create_directories(dir);
    write_bundle(dir / "bg", scene.background);
    write_pfm(dir / "bg" / "image.pfm", scene.background_image);
    write_bundle(dir / "obj", scene.full, /*include_shading=*/false);
    write_pfm(dir / "mask.pfm", scene.object_mask);
    write_pfm(dir / "gt_composite.pfm", scene.composite_image);
    write_pfm(dir / "gt_background.pfm", scene.background_image);
    write_pfm(dir / "shadow_mask.pfm", scene.shadow_mask);
    std::ofstream out(dir / "scene.json");
    if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "scene.json").string());
    out << scene_to_json(scene.spec) << '\n';
}

// --- support region ---

double scaled_min_radius(int width) { return kSupportMinRadius512 * width / 512.0; }

namespace {

// 1-D squared Euclidean distance transform of a sampled function.
void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<int>& v, std::vector<double>& z) {
    const int n = static_cast<int>(f.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    int k = 0;
    v[0] = 0;
    z[0] = -inf;
    z[1] = inf;
    for (int q = 1; q < n; ++q) {
        if (f[q] == inf) continue;
        while (true) {
            const int p = v[k];
            if (f[p] == inf) {
                // replace an infinite parabola outright
                if (k == 0) {
                    v[0] = q;
                    z[0] = -inf;
                    z[1] = inf;
                    break;
                }
                --k;
                continue;
            }
            const double s = ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
            if (s <= z[k]) {
                if (k == 0) {
                    v[0] = q;
                    z[0] = -inf;
                    z[1] = inf;
                    break;
                }
                --k;
                continue;
            }
            ++k;
            v[k] = q;
            z[k] = s;
            z[k + 1] = inf;
            break;
        }
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        while (z[k + 1] < q) ++k;
        const double diff = q - v[k];
        d[q] = f[v[k]] == inf ? inf : diff * diff + f[v[k]];
    }
}

}  // namespace

FloatMap distance_to_outside(const FloatMap& inside) {
    // Pad by one pixel of "outside" so the image border bounds every circle.
    const int w = inside.width() + 2;
    const int h = inside.height() + 2;
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            grid[static_cast<std::size_t>(y + 1) * w + x + 1] = inside.at(x, y) >= 0.5f ? inf : 0.0;

    const int n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<int> v(n);
    f.resize(h); d.resize(h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(f, d, v, z);
        for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
    }
    f.resize(w); d.resize(w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
        edt_1d(f, d, v, z);
        for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
    }
    FloatMap out(inside.width(), inside.height(), 1);
    for (int y = 0; y < inside.height(); ++y)
        for (int x = 0; x < inside.width(); ++x)
            out.at(x, y) = static_cast<float>(std::sqrt(grid[static_cast<std::size_t>(y + 1) * w + x + 1]));
    return out;
}

SupportRegion detect_support_region(const FloatMap& normals, const CameraModel& camera, double angle_thresh_deg,
                                    std::optional<double> min_radius) {
    if (normals.channels() != 3) throw Error(ErrorCode::InvalidArgument, "normals must have 3 channels");
    const Vec3 up = normalize(camera.up);
    const double cos_thresh = std::cos(angle_thresh_deg * kDeg);
    SupportRegion region;
    region.mask = FloatMap(normals.width(), normals.height(), 1, 0.0f);
    for (int y = 0; y < normals.height(); ++y) {
        for (int x = 0; x < normals.width(); ++x) {
            const Vec3 n = normalize(Vec3{normals.at(x, y, 0), normals.at(x, y, 1), normals.at(x, y, 2)});
            if (dot(n, up) > cos_thresh) region.mask.at(x, y) = 1.0f;
        }
    }
    region.distance = distance_to_outside(region.mask);
    float best = 0.0f;
    for (int y = 0; y < normals.height(); ++y) {
        for (int x = 0; x < normals.width(); ++x) {
            if (region.distance.at(x, y) > best) {
                best = region.distance.at(x, y);
                region.center_x = x;
                region.center_y = y;
            }
        }
    }
    // Squared distances are integers; recover the exact double from the float map.
    region.inscribed_radius = std::sqrt(std::round(static_cast<double>(best) * best));
    region.accepted = best > 0.0f && region.inscribed_radius >= min_radius.value_or(scaled_min_radius(normals.width()));
    return region;
}

Placement select_placement(const SupportRegion& region, double footprint_radius) {
    Placement p;
    p.max_radius = region.inscribed_radius;
    if (!region.accepted || footprint_radius > region.inscribed_radius) return p;
    p.accepted = true;
    p.x = region.center_x;
    p.y = region.center_y;
    return p;
}

}  // namespace icomp
