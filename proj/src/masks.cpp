#include "icomp/masks.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <unordered_map>

#include "icomp/image_ops.hpp"

namespace icomp {

namespace {

// Portable uniform draws: std:: distributions are implementation-defined, the
// engine is not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) {  // inclusive
        const auto span = static_cast<std::uint64_t>(hi - lo + 1);
        return lo + static_cast<int>(engine_() % span);
    }

private:
    std::mt19937_64 engine_;
};

void zero_rect(FloatMap& m, double x0, double y0, double x1, double y1) {
    const int ix0 = std::max(0, static_cast<int>(std::floor(x0)));
    const int iy0 = std::max(0, static_cast<int>(std::floor(y0)));
    const int ix1 = std::min(m.width(), static_cast<int>(std::ceil(x1)));
    const int iy1 = std::min(m.height(), static_cast<int>(std::ceil(y1)));
    for (int y = iy0; y < iy1; ++y)
        for (int x = ix0; x < ix1; ++x) m.at(x, y) = 0.0f;
}

void zero_ellipse(FloatMap& m, double cx, double cy, double rx, double ry) {
    for (int y = 0; y < m.height(); ++y) {
        const double dy = (y + 0.5 - cy) / ry;
        if (std::abs(dy) > 1.0) continue;
        for (int x = 0; x < m.width(); ++x) {
            const double dx = (x + 0.5 - cx) / rx;
            if (dx * dx + dy * dy <= 1.0) m.at(x, y) = 0.0f;
        }
    }
}

}  // namespace

TrainingMask sample_training_mask(int width, int height, std::uint64_t seed, const TrainingMaskConfig& config) {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "mask size must be at least 1x1");
    Rng rng(seed);
    const double u = rng.uniform();
    if (u >= config.p_shapes + config.p_remove_all) {
        return {FloatMap(width, height, 1, 1.0f), TrainingMaskBranch::keep_all};
    }
    if (u >= config.p_shapes) {
        return {FloatMap(width, height, 1, 0.0f), TrainingMaskBranch::remove_all};
    }

    FloatMap mask(width, height, 1, 1.0f);
    const int shapes = rng.uniform_int(config.min_shapes, config.max_shapes);
    for (int i = 0; i < shapes; ++i) {
        const bool rect = rng.uniform() < 0.5;
        const double span_x = rng.uniform(config.min_span, config.max_span) * width;
        const double span_y = rect ? rng.uniform(config.min_span, config.max_span) * height : 0.0;
        if (rect) {
            const double x0 = rng.uniform(0.0, width - span_x);
            const double y0 = rng.uniform(0.0, height - span_y);
            zero_rect(mask, x0, y0, x0 + span_x, y0 + span_y);
        } else {
            // circle: diameter drawn against the smaller dimension
            const double diameter = span_x / width * std::min(width, height);
            const double r = 0.5 * diameter;
            const double cx = rng.uniform(r, width - r);
            const double cy = rng.uniform(r, height - r);
            zero_ellipse(mask, cx, cy, r, r);
        }
    }
    return {std::move(mask), TrainingMaskBranch::shapes};
}

namespace {

struct HorizontalBasis {
    Vec3 up, e0, e1;
};

HorizontalBasis horizontal_basis(const Vec3& up_in) {
    const Vec3 up = normalize(up_in);
    const Vec3 seed = std::abs(up.x) < 0.9 ? Vec3{1.0, 0.0, 0.0} : Vec3{0.0, 0.0, 1.0};
    const Vec3 e0 = normalize(seed - up * dot(seed, up));
    const Vec3 e1 = cross(up, e0);
    return {up, e0, e1};
}

Vec3 position_at(const FloatMap& positions, int x, int y) {
    return {positions.at(x, y, 0), positions.at(x, y, 1), positions.at(x, y, 2)};
}

// Uniform hash grid over the object points with cell size >= radius, so every
// point within `radius` of a query lies in the 27 cells around it.
class PointGrid {
public:
    PointGrid(std::vector<Vec3> points, double radius) : points_(std::move(points)) {
        cell_ = radius * (1.0 + 1e-6);
        for (std::size_t i = 0; i < points_.size(); ++i) cells_[key(cell_of(points_[i]))].push_back(i);
    }

    bool any_within(const Vec3& q, double radius) const {
        const double r2 = radius * radius;
        const auto c = cell_of(q);
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
                    if (it == cells_.end()) continue;
                    for (const std::size_t i : it->second) {
                        const Vec3 d = points_[i] - q;
                        if (dot(d, d) <= r2) return true;
                    }
                }
        return false;
    }

private:
    std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
        return {static_cast<std::int64_t>(std::floor(p.x / cell_)), static_cast<std::int64_t>(std::floor(p.y / cell_)),
                static_cast<std::int64_t>(std::floor(p.z / cell_))};
    }
    static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
        std::uint64_t h = 1469598103934665603ull;
        for (const auto v : c) {
            h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
            h *= 1099511628211ull;
        }
        return h;
    }

    std::vector<Vec3> points_;
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace

InferenceMask build_inference_shading_mask(const FloatMap& obj_mask, const FloatMap& comp_depth,
                                           const CameraModel& camera, const MaskParams& params, Exec exec) {
    require_same_size(obj_mask, comp_depth, "inference mask");
    if (obj_mask.channels() != 1 || comp_depth.channels() != 1) {
        throw Error(ErrorCode::InvalidArgument, "inference mask expects single-channel mask and depth");
    }
    if (!(params.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be positive");

    const FloatMap positions = unproject_depth(comp_depth, camera);
    const HorizontalBasis basis = horizontal_basis(camera.up);
    const int w = obj_mask.width();
    const int h = obj_mask.height();

    ObjectExtent ext;
    double up_min = std::numeric_limits<double>::infinity();
    ext.top = -std::numeric_limits<double>::infinity();
    ext.h0_min = ext.h1_min = std::numeric_limits<double>::infinity();
    ext.h0_max = ext.h1_max = -std::numeric_limits<double>::infinity();
    std::vector<Vec3> points;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (obj_mask.at(x, y) < 0.5f) continue;
            const Vec3 p = position_at(positions, x, y);
            points.push_back(p);
            const double up = dot(p, basis.up);
            const double h0 = dot(p, basis.e0);
            const double h1 = dot(p, basis.e1);
            up_min = std::min(up_min, up);
            ext.top = std::max(ext.top, up);
            ext.h0_min = std::min(ext.h0_min, h0);
            ext.h0_max = std::max(ext.h0_max, h0);
            ext.h1_min = std::min(ext.h1_min, h1);
            ext.h1_max = std::max(ext.h1_max, h1);
        }
    }
    if (points.empty()) throw Error(ErrorCode::EmptyMask, "object mask has no pixels");
    ext.count = points.size();
    ext.height = ext.top - up_min;

    InferenceMask result;
    result.extent = ext;
    result.radius = params.lambda * ext.height;
    result.mask = FloatMap(w, h, 1, 1.0f);

    const double radius = result.radius;
    const PointGrid grid(radius > 0.0 ? std::move(points) : std::vector<Vec3>{}, radius > 0.0 ? radius : 1.0);
    FloatMap& mask = result.mask;
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (obj_mask.at(x, y) >= 0.5f) {
                mask.at(x, y) = 0.0f;
                continue;
            }
            if (radius <= 0.0) continue;
            const Vec3 p = position_at(positions, x, y);
            if (!grid.any_within(p, radius)) continue;
            const double h0 = dot(p, basis.e0);
            const double h1 = dot(p, basis.e1);
            const bool above = dot(p, basis.up) > ext.top && h0 >= ext.h0_min && h0 <= ext.h0_max &&
                               h1 >= ext.h1_min && h1 <= ext.h1_max;
            if (!above) mask.at(x, y) = 0.0f;
        }
    });
    return result;
}

FloatMap feather_object_mask(const FloatMap& mask) {
    return clamp(gaussian_blur(mask, kFeatherKernel, kFeatherSigma), 0.0f, 1.0f);
}

FloatMap binarize(const FloatMap& mask) {
    FloatMap out = mask;
    for (float& v : out.data()) v = v >= 0.5f ? 1.0f : 0.0f;
    return out;
}

std::size_t count_on(const FloatMap& mask) {
    return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(), [](float v) { return v >= 0.5f; }));
}

}  // namespace icomp
