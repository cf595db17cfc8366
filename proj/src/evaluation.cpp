#include "icomp/evaluation.hpp"

#include "icomp/image_ops.hpp"
#include "icomp/metrics.hpp"

namespace icomp {

ShadowOverlap shadow_overlap(const FloatMap& composite, const FloatMap& background_image, const FloatMap& oracle_shadow,
                             const FloatMap& object_mask) {
    require_same_size(composite, background_image, "shadow_overlap", true);
    require_same_size(oracle_shadow, object_mask, "shadow_overlap masks");
    require_same_size(composite, object_mask, "shadow_overlap");
    const FloatMap g = to_grayscale(composite);
    const FloatMap gb = to_grayscale(background_image);
    ShadowOverlap o;
    for (int y = 0; y < g.height(); ++y) {
        for (int x = 0; x < g.width(); ++x) {
            if (object_mask.at(x, y) >= 0.5f) continue;
            const bool truth = oracle_shadow.at(x, y) >= 0.5f;
            const bool found = g.at(x, y) < kShadowRatioThreshold * gb.at(x, y);
            o.intersection += truth && found;
            o.uni += truth || found;
        }
    }
    return o;
}

SceneOutcome run_scene_oracle(const GeneratedScene& scene, const MaskParams& params) {
    const AnalyticRenderer renderer(scene.spec.light());
    const PipelineResult r = compose_pipeline(scene_inputs(scene, params), renderer);
    SceneOutcome out;
    out.psnr = psnr(r.composite, scene.composite_image);
    out.flip = flip(r.composite, scene.composite_image).mean;
    out.shadow = shadow_overlap(r.composite, scene.background_image, scene.shadow_mask, scene.object_mask);
    out.masked_pixels = r.intrinsics.shading_mask.pixel_count() - count_on(r.intrinsics.shading_mask);
    out.alignment = r.intrinsics.alignment;
    return out;
}

}  // namespace icomp
