#pragma once

#include <array>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"
#include "icomp/masks.hpp"
#include "icomp/renderer.hpp"

namespace icomp {

inline constexpr float kRatioEpsilon = 1e-4f;
inline constexpr double kColorBalanceMin = 0.25;
inline constexpr double kColorBalanceMax = 4.0;

enum class AlignmentFit {
    least_squares,  // plain 2x2 normal equations over every footprint pixel
    robust,         // Theil-Sen start, MAD outlier trim, least squares on the inliers
};

enum class FootprintMode {
    lowest_pixel,         // per column, the lowest object pixel against the background at that pixel
    vertical_projection,  // every object point dropped along camera.up onto the object's base plane
};

struct CompositeInputs {
    IntrinsicBundle background;  // shading = image / albedo
    FloatMap background_image;   // x_bg, linear RGB
    IntrinsicBundle object;      // shading ignored (unknown)
    FloatMap object_mask;        // binary, 1 = object
    MaskParams params;
    // Columns whose lowest object pixel is not a contact point (overhangs,
    // rounded bottoms) are outliers for the plain fit.
    AlignmentFit alignment_fit = AlignmentFit::robust;
    FootprintMode footprint = FootprintMode::vertical_projection;
};

struct AffineFit {
    double scale = 1.0;
    double offset = 0.0;
    std::size_t inliers = 0;
};

/// Fits bg ~ scale * obj + offset. A single pair, or pairs at constant obj,
/// only fix the offset.
AffineFit fit_depth_affine(std::span<const double> obj, std::span<const double> bg,
                           AlignmentFit method = AlignmentFit::least_squares);

struct DepthAlignment {
    double scale = 1.0;
    double offset = 0.0;
    std::size_t footprint_pixels = 0;
    std::size_t inliers = 0;
    FloatMap depth;  // aligned object depth
};

/// Footprint = lowest object pixel in each column. Fits depth_bg ~ a*depth_obj + b
/// over the footprint and applies it to every pixel where mask > 0.
DepthAlignment align_object_depth(const FloatMap& obj_depth, const FloatMap& bg_depth, const FloatMap& mask,
                                  AlignmentFit method = AlignmentFit::least_squares);

/// Drops each object point onto the plane through the object's lowest point
/// (normal camera.up) and pairs the dropped point's depth with the background
/// depth at the pixel it projects to. The fit is refined `iterations` times,
/// since unprojecting a mis-scaled depth moves the dropped points.
DepthAlignment align_object_depth_projected(const FloatMap& obj_depth, const FloatMap& bg_depth, const FloatMap& mask,
                                            const CameraModel& camera, AlignmentFit method = AlignmentFit::robust,
                                            int iterations = 3);

/// Pixel indices (x, y) of the footprint.
std::vector<std::array<int, 2>> object_footprint(const FloatMap& mask);

struct CompositeResult {
    IntrinsicBundle bundle;  // i_comp, shading already masked
    FloatMap shading_mask;   // 1 = known
    DepthAlignment alignment;
    InferenceMask inference;
};

/// m*obj + (1-m)*bg per intrinsic channel (object depth aligned first), then
/// the inference shading mask applied to the background shading.
CompositeResult composite_intrinsics(const CompositeInputs& inputs);

/// Per-channel m*obj + (1-m)*bg. Normals are renormalised where 0 < m < 1.
FloatMap blend_layers(const FloatMap& obj, const FloatMap& bg, const FloatMap& mask, bool renormalize = false);

/// R = clamp(gray(comp) / max(gray(bg), eps), 0, 1) where shading is masked,
/// 1 elsewhere.
FloatMap shadow_opacity_ratio(const FloatMap& render_comp, const FloatMap& render_bg, const FloatMap& shading_mask);

/// C_c = mean(x_bg,c) / mean(render_comp,c) over pixels with m < 0.5,
/// clamped to [0.25, 4].
Rgb color_balance_factor(const FloatMap& background_image, const FloatMap& render_comp, const FloatMap& mask);

/// x = (1-m) R x_bg + m C render_comp, clamped at 0.
FloatMap final_composite(const FloatMap& background_image, const FloatMap& render_comp, const FloatMap& ratio,
                         const FloatMap& feathered_mask, const Rgb& color_balance);

struct PipelineResult {
    FloatMap composite;
    FloatMap ratio;
    FloatMap render_comp;
    FloatMap render_bg;
    FloatMap feathered_mask;
    Rgb color_balance{1.0, 1.0, 1.0};
    CompositeResult intrinsics;
    bool empty_object = false;
};

/// The full insertion pipeline; see README for the stage order.
PipelineResult compose_pipeline(const CompositeInputs& inputs, const Renderer& renderer);

}  // namespace icomp
