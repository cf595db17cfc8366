#include "icomp/compositor.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <cmath>

#include "icomp/image_ops.hpp"

namespace icomp {

std::vector<std::array<int, 2>> object_footprint(const FloatMap& mask) {
    std::vector<std::array<int, 2>> footprint;
    for (int x = 0; x < mask.width(); ++x) {
        for (int y = mask.height() - 1; y >= 0; --y) {
            if (mask.at(x, y) >= 0.5f) {
                footprint.push_back({x, y});
                break;
            }
        }
    }
    return footprint;
}

namespace {

AffineFit least_squares_fit(std::span<const double> obj, std::span<const double> bg,
                            const std::vector<std::size_t>& idx) {
    AffineFit fit;
    fit.inliers = idx.size();
    const double n = static_cast<double>(idx.size());
    double mean_obj = 0.0, mean_bg = 0.0;
    for (const std::size_t i : idx) {
        mean_obj += obj[i];
        mean_bg += bg[i];
    }
    mean_obj /= n;
    mean_bg /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const std::size_t i : idx) {
        const double dx = obj[i] - mean_obj;
        sxx += dx * dx;
        sxy += dx * (bg[i] - mean_bg);
    }
    if (idx.size() == 1 || sxx <= 1e-12 * n * std::max(1.0, mean_obj * mean_obj)) {
        fit.offset = mean_bg - mean_obj;
    } else {
        fit.scale = sxy / sxx;
        fit.offset = mean_bg - fit.scale * mean_obj;
    }
    return fit;
}

double median_of(std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
}

FloatMap apply_alignment(const FloatMap& obj_depth, const FloatMap& mask, double scale, double offset) {
    FloatMap depth = obj_depth;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y) <= 0.0f) continue;
            const double d = scale * obj_depth.at(x, y) + offset;
            if (!(d > 0.0)) {
                throw Error(ErrorCode::InvalidArgument, "depth alignment produced non-positive depth at (" +
                                                            std::to_string(x) + "," + std::to_string(y) + ")");
            }
            depth.at(x, y) = static_cast<float>(d);
        }
    }
    return depth;
}

}  // namespace

AffineFit fit_depth_affine(std::span<const double> obj, std::span<const double> bg, AlignmentFit method) {
    if (obj.size() != bg.size()) throw Error(ErrorCode::DimensionMismatch, "fit_depth_affine: size mismatch");
    if (obj.empty()) throw Error(ErrorCode::EmptyMask, "object footprint is empty");
    std::vector<std::size_t> all(obj.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    if (method == AlignmentFit::least_squares || obj.size() < 3) return least_squares_fit(obj, bg, all);

    // Theil-Sen slope over pairs with distinct object depth, on at most
    // kTheilSenPoints evenly strided samples.
    constexpr std::size_t kTheilSenPoints = 400;
    const std::size_t stride = (obj.size() + kTheilSenPoints - 1) / kTheilSenPoints;
    const double spread = *std::max_element(obj.begin(), obj.end()) - *std::min_element(obj.begin(), obj.end());
    std::vector<double> slopes;
    for (std::size_t i = 0; i < obj.size(); i += stride) {
        for (std::size_t j = i + stride; j < obj.size(); j += stride) {
            const double dx = obj[j] - obj[i];
            if (std::abs(dx) > 1e-9 * std::max(1.0, spread)) slopes.push_back((bg[j] - bg[i]) / dx);
        }
    }
    const double scale = slopes.empty() ? 1.0 : median_of(std::move(slopes));
    std::vector<double> res(obj.size());
    for (std::size_t i = 0; i < obj.size(); ++i) res[i] = bg[i] - scale * obj[i];
    const double offset = median_of(res);
    for (double& r : res) r = std::abs(r - offset);
    const double mad = median_of(res);
    // Floor the threshold so exact data keeps every pair.
    const double mean_bg = std::accumulate(bg.begin(), bg.end(), 0.0) / static_cast<double>(bg.size());
    const double thresh = std::max(3.0 * 1.4826 * mad, 1e-6 * std::max(1.0, std::abs(mean_bg)));
    std::vector<std::size_t> inliers;
    for (std::size_t i = 0; i < obj.size(); ++i)
        if (res[i] <= thresh) inliers.push_back(i);
    return least_squares_fit(obj, bg, inliers);
}

DepthAlignment align_object_depth(const FloatMap& obj_depth, const FloatMap& bg_depth, const FloatMap& mask,
                                  AlignmentFit method) {
    require_same_size(obj_depth, bg_depth, "align_object_depth", true);
    require_same_size(obj_depth, mask, "align_object_depth mask");
    const auto footprint = object_footprint(mask);
    if (footprint.empty()) throw Error(ErrorCode::EmptyMask, "object footprint is empty");

    std::vector<double> obj, bg;
    for (const auto& [x, y] : footprint) {
        obj.push_back(obj_depth.at(x, y));
        bg.push_back(bg_depth.at(x, y));
    }
    const AffineFit fit = fit_depth_affine(obj, bg, method);
    DepthAlignment result;
    result.footprint_pixels = footprint.size();
    result.inliers = fit.inliers;
    result.scale = fit.scale;
    result.offset = fit.offset;

    result.depth = apply_alignment(obj_depth, mask, fit.scale, fit.offset);
    return result;
}

DepthAlignment align_object_depth_projected(const FloatMap& obj_depth, const FloatMap& bg_depth, const FloatMap& mask,
                                            const CameraModel& camera, AlignmentFit method, int iterations) {
    require_same_size(obj_depth, bg_depth, "align_object_depth_projected", true);
    require_same_size(obj_depth, mask, "align_object_depth_projected mask");
    if (iterations < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
    const Vec3 up = normalize(camera.up);
    const int w = mask.width(), h = mask.height();

    DepthAlignment result;
    result.depth = obj_depth;
    for (int it = 0; it < iterations; ++it) {
        std::vector<Vec3> points;
        double base = std::numeric_limits<double>::infinity();
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                if (mask.at(x, y) < 0.5f) continue;
                const double z = result.depth.at(x, y);
                if (!(z > 0.0)) throw Error(ErrorCode::InvalidArgument, "object depth must be positive");
                points.push_back(camera.unproject(x, y, z));
                base = std::min(base, dot(points.back(), up));
            }
        }
        if (points.empty()) throw Error(ErrorCode::EmptyMask, "object footprint is empty");

        std::vector<double> obj, bg;
        for (const Vec3& p : points) {
            const Vec3 dropped = p - up * (dot(p, up) - base);
            if (dropped.z <= 0.0) continue;
            double u = 0.0, v = 0.0;
            camera.project(dropped, u, v);
            const long px = std::lround(u), py = std::lround(v);
            if (px < 0 || py < 0 || px >= w || py >= h) continue;
            obj.push_back(dropped.z);
            bg.push_back(bg_depth.at(static_cast<int>(px), static_cast<int>(py)));
        }
        if (obj.empty()) throw Error(ErrorCode::EmptyMask, "object footprint projects outside the image");

        // The dropped depth is linear in the current depth, so compose the fits.
        const AffineFit fit = fit_depth_affine(obj, bg, method);
        result.offset = fit.scale * result.offset + fit.offset;
        result.scale = fit.scale * result.scale;
        result.footprint_pixels = obj.size();
        result.inliers = fit.inliers;
        result.depth = apply_alignment(obj_depth, mask, result.scale, result.offset);
    }
    return result;
}

FloatMap blend_layers(const FloatMap& obj, const FloatMap& bg, const FloatMap& mask, bool renormalize) {
    require_same_size(obj, bg, "blend_layers", true);
    require_same_size(obj, mask, "blend_layers mask");
    FloatMap out(bg.width(), bg.height(), bg.channels());
    const int ch = bg.channels();
    for (int y = 0; y < bg.height(); ++y) {
        for (int x = 0; x < bg.width(); ++x) {
            const float m = mask.at(x, y);
            if (m <= 0.0f) {
                for (int c = 0; c < ch; ++c) out.at(x, y, c) = bg.at(x, y, c);
                continue;
            }
            if (m >= 1.0f) {
                for (int c = 0; c < ch; ++c) out.at(x, y, c) = obj.at(x, y, c);
                continue;
            }
            double norm2 = 0.0;
            for (int c = 0; c < ch; ++c) {
                const float v = m * obj.at(x, y, c) + (1.0f - m) * bg.at(x, y, c);
                out.at(x, y, c) = v;
                norm2 += static_cast<double>(v) * v;
            }
            if (renormalize && norm2 > 0.0) {
                const double inv = 1.0 / std::sqrt(norm2);
                for (int c = 0; c < ch; ++c) out.at(x, y, c) = static_cast<float>(out.at(x, y, c) * inv);
            }
        }
    }
    return out;
}

CompositeResult composite_intrinsics(const CompositeInputs& in) {
    const FloatMap& m = in.object_mask;
    if (m.channels() != 1) throw Error(ErrorCode::InvalidArgument, "object mask must be single-channel");
    validate_bundle(in.background);
    require_same_size(m, in.background.depth, "object mask vs background");
    require_same_size(in.object.depth, in.background.depth, "object vs background bundle");
    const FloatMap binary = binarize(m);
    validate_bundle(in.object, &binary);

    CompositeResult result;
    result.alignment = in.footprint == FootprintMode::vertical_projection
                           ? align_object_depth_projected(in.object.depth, in.background.depth, m,
                                                          in.background.camera, in.alignment_fit)
                           : align_object_depth(in.object.depth, in.background.depth, m, in.alignment_fit);

    IntrinsicBundle& comp = result.bundle;
    comp.camera = in.background.camera;
    comp.depth = blend_layers(result.alignment.depth, in.background.depth, m);
    comp.normals = blend_layers(in.object.normals, in.background.normals, m, true);
    comp.albedo = blend_layers(in.object.albedo, in.background.albedo, m);
    if (in.object.roughness && in.background.roughness) {
        comp.roughness = blend_layers(*in.object.roughness, *in.background.roughness, m);
    } else {
        comp.roughness = in.background.roughness;
    }
    if (in.object.metallic && in.background.metallic) {
        comp.metallic = blend_layers(*in.object.metallic, *in.background.metallic, m);
    } else {
        comp.metallic = in.background.metallic;
    }

    result.inference = build_inference_shading_mask(binary, comp.depth, comp.camera, in.params);
    result.shading_mask = result.inference.mask;

    // Unknown shading is filled with 0; the mask is what renderers must honour.
    comp.shading = in.background.shading;
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            if (result.shading_mask.at(x, y) < 0.5f)
                for (int c = 0; c < 3; ++c) comp.shading.at(x, y, c) = 0.0f;
    return result;
}

FloatMap shadow_opacity_ratio(const FloatMap& render_comp, const FloatMap& render_bg, const FloatMap& shading_mask) {
    require_same_size(render_comp, render_bg, "shadow_opacity_ratio", true);
    require_same_size(render_comp, shading_mask, "shadow_opacity_ratio mask");
    const FloatMap gc = to_grayscale(render_comp);
    const FloatMap gb = to_grayscale(render_bg);
    FloatMap ratio(shading_mask.width(), shading_mask.height(), 1, 1.0f);
    for (int y = 0; y < ratio.height(); ++y) {
        for (int x = 0; x < ratio.width(); ++x) {
            if (shading_mask.at(x, y) >= 0.5f) continue;
            ratio.at(x, y) = std::clamp(gc.at(x, y) / std::max(gb.at(x, y), kRatioEpsilon), 0.0f, 1.0f);
        }
    }
    return ratio;
}

Rgb color_balance_factor(const FloatMap& background_image, const FloatMap& render_comp, const FloatMap& mask) {
    require_same_size(background_image, render_comp, "color_balance_factor", true);
    require_same_size(background_image, mask, "color_balance_factor mask");
    double sum_bg[3] = {0, 0, 0};
    double sum_render[3] = {0, 0, 0};
    std::size_t count = 0;
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) {
            if (mask.at(x, y) >= 0.5f) continue;
            ++count;
            for (int c = 0; c < 3; ++c) {
                sum_bg[c] += background_image.at(x, y, c);
                sum_render[c] += render_comp.at(x, y, c);
            }
        }
    }
    if (count == 0 || count * 100 < mask.pixel_count()) {
        throw Error(ErrorCode::InvalidArgument, "color balance needs background on at least 1% of the image");
    }
    double factor[3];
    for (int c = 0; c < 3; ++c) {
        const double ratio = sum_render[c] > 0.0 ? sum_bg[c] / sum_render[c] : kColorBalanceMax;
        factor[c] = std::clamp(ratio, kColorBalanceMin, kColorBalanceMax);
    }
    return {factor[0], factor[1], factor[2]};
}

FloatMap final_composite(const FloatMap& background_image, const FloatMap& render_comp, const FloatMap& ratio,
                         const FloatMap& feathered_mask, const Rgb& color_balance) {
    require_same_size(background_image, render_comp, "final_composite", true);
    require_same_size(background_image, ratio, "final_composite ratio");
    require_same_size(background_image, feathered_mask, "final_composite mask");
    const float balance[3] = {static_cast<float>(color_balance.r), static_cast<float>(color_balance.g),
                              static_cast<float>(color_balance.b)};
    FloatMap out(background_image.width(), background_image.height(), 3);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            const float m = feathered_mask.at(x, y);
            const float r = ratio.at(x, y);
            for (int c = 0; c < 3; ++c) {
                const float v = (1.0f - m) * r * background_image.at(x, y, c) + m * balance[c] * render_comp.at(x, y, c);
                out.at(x, y, c) = std::max(v, 0.0f);
            }
        }
    }
    return out;
}

namespace {

FloatMap render_stage(const Renderer& renderer, const RenderRequest& request, const char* stage) {
    try {
        return renderer.render(request);
    } catch (const RendererError& e) {
        throw RendererError(e.code(), std::string(stage) + ": " + e.what(), e.exit_code());
    } catch (const Error& e) {
        throw Error(e.code(), std::string(stage) + ": " + e.what());
    }
}

}  // namespace

PipelineResult compose_pipeline(const CompositeInputs& in, const Renderer& renderer) {
    require_same_size(in.background_image, in.background.depth, "background image vs bundle");
    if (in.background_image.channels() != 3) throw Error(ErrorCode::InvalidArgument, "background image must be RGB");

    PipelineResult out;
    if (count_on(in.object_mask) == 0) {
        out.empty_object = true;
        out.composite = in.background_image;
        out.ratio = FloatMap(in.background_image.width(), in.background_image.height(), 1, 1.0f);
        out.feathered_mask = FloatMap(in.background_image.width(), in.background_image.height(), 1, 0.0f);
        return out;
    }

    out.intrinsics = composite_intrinsics(in);
    const FloatMap& s = out.intrinsics.shading_mask;

    RenderRequest comp_request{out.intrinsics.bundle, s, in.params.seed};
    RenderRequest bg_request{in.background, s, in.params.seed};
    for (int y = 0; y < s.height(); ++y)
        for (int x = 0; x < s.width(); ++x)
            if (s.at(x, y) < 0.5f)
                for (int c = 0; c < 3; ++c) bg_request.bundle.shading.at(x, y, c) = 0.0f;

    out.render_comp = render_stage(renderer, comp_request, "render(composite)");
    out.render_bg = render_stage(renderer, bg_request, "render(background)");
    require_same_size(out.render_comp, in.background_image, "composite render", true);
    require_same_size(out.render_bg, in.background_image, "background render", true);

    out.ratio = shadow_opacity_ratio(out.render_comp, out.render_bg, s);
    out.color_balance = color_balance_factor(in.background_image, out.render_comp, in.object_mask);
    out.feathered_mask = feather_object_mask(binarize(in.object_mask));
    out.composite = final_composite(in.background_image, out.render_comp, out.ratio, out.feathered_mask,
                                    out.color_balance);
    return out;
}

}  // namespace icomp
