#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"

namespace icomp::testing {

// Brute-force reference for the inference mask: all-pairs distances, the
// "directly above" rule over the object's horizontal bounds.
inline FloatMap brute_force_mask(const FloatMap& obj, const FloatMap& depth, const CameraModel& cam, double lambda) {
    const FloatMap pos = unproject_depth(depth, cam);
    const Vec3 up = normalize(cam.up);
    const Vec3 e0 = normalize(Vec3{1, 0, 0} - up * up.x);
    const Vec3 e1 = cross(up, e0);
    std::vector<Vec3> pts;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    double a0 = lo, b0 = hi, a1 = lo, b1 = hi;
    for (int y = 0; y < obj.height(); ++y) {
        for (int x = 0; x < obj.width(); ++x) {
            if (obj.at(x, y) < 0.5f) continue;
            const Vec3 p{pos.at(x, y, 0), pos.at(x, y, 1), pos.at(x, y, 2)};
            pts.push_back(p);
            lo = std::min(lo, dot(p, up));
            hi = std::max(hi, dot(p, up));
            a0 = std::min(a0, dot(p, e0));
            b0 = std::max(b0, dot(p, e0));
            a1 = std::min(a1, dot(p, e1));
            b1 = std::max(b1, dot(p, e1));
        }
    }
    const double d = lambda * (hi - lo);
    FloatMap out(obj.width(), obj.height(), 1, 1.0f);
    for (int y = 0; y < obj.height(); ++y) {
        for (int x = 0; x < obj.width(); ++x) {
            if (obj.at(x, y) >= 0.5f) {
                out.at(x, y) = 0.0f;
                continue;
            }
            const Vec3 p{pos.at(x, y, 0), pos.at(x, y, 1), pos.at(x, y, 2)};
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : pts) {
                const Vec3 v = p - q;
                best = std::min(best, dot(v, v));
            }
            const bool near = d > 0.0 && best <= d * d;
            const bool above = dot(p, up) > hi && dot(p, e0) >= a0 && dot(p, e0) <= b0 && dot(p, e1) >= a1 &&
                               dot(p, e1) <= b1;
            if (near && !above) out.at(x, y) = 0.0f;
        }
    }
    return out;
}

}  // namespace icomp::testing
