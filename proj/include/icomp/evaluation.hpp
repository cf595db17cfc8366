#pragma once

#include <cstddef>

#include "icomp/compositor.hpp"
#include "icomp/scene.hpp"

namespace icomp {

/// Below this ratio of gray(composite) to gray(background), a non-object
/// pixel counts as shadowed by the pipeline.
inline constexpr float kShadowRatioThreshold = 0.9f;

struct ShadowOverlap {
    std::size_t intersection = 0;
    std::size_t uni = 0;
    double iou() const { return uni == 0 ? 1.0 : static_cast<double>(intersection) / static_cast<double>(uni); }
};

/// Compares the pipeline's shadow (composite darker than the background)
/// with the oracle shadow mask, over non-object pixels.
ShadowOverlap shadow_overlap(const FloatMap& composite, const FloatMap& background_image, const FloatMap& oracle_shadow,
                             const FloatMap& object_mask);

struct SceneOutcome {
    double psnr = 0.0;
    double flip = 0.0;
    ShadowOverlap shadow;
    std::size_t masked_pixels = 0;  // unknown-shading pixels of the inference mask
    DepthAlignment alignment;
};

/// Runs compose_pipeline with the analytic renderer on a generated scene and
/// scores it against the directly rendered full scene.
SceneOutcome run_scene_oracle(const GeneratedScene& scene, const MaskParams& params = {});

inline CompositeInputs scene_inputs(const GeneratedScene& scene, const MaskParams& params = {}) {
    return CompositeInputs{scene.background, scene.background_image, scene.full, scene.object_mask, params};
}

}  // namespace icomp
