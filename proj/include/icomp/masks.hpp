#pragma once

#include <cstdint>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"
#include "icomp/parallel.hpp"

namespace icomp {

// Shading-mask polarity used throughout: 1 = shading known and kept,
// 0 = shading masked out (to be synthesised by the renderer).

inline constexpr double kDefaultLambda = 1.0;
inline constexpr std::uint64_t kDefaultSeed = 469;

struct MaskParams {
    double lambda = kDefaultLambda;
    std::uint64_t seed = kDefaultSeed;
};

/// Configuration of the random training-mask sampler.
struct TrainingMaskConfig {
    double p_shapes = 0.60;
    double p_remove_all = 0.30;
    double p_keep_all = 0.10;
    int min_shapes = 1;
    int max_shapes = 5;
    double min_span = 0.10;  // fraction of the image dimension
    double max_span = 0.50;
};

enum class TrainingMaskBranch { shapes, remove_all, keep_all };

struct TrainingMask {
    FloatMap mask;
    TrainingMaskBranch branch;
};

TrainingMask sample_training_mask(int width, int height, std::uint64_t seed, const TrainingMaskConfig& config = {});

/// Geometry extracted from the object pixels of the composited depth.
struct ObjectExtent {
    std::size_t count = 0;
    double height = 0.0;     // extent along camera.up
    double top = 0.0;        // max up-coordinate
    double h0_min = 0.0, h0_max = 0.0;  // footprint bounds on the first horizontal axis
    double h1_min = 0.0, h1_max = 0.0;  // ... and the second
};

struct InferenceMask {
    FloatMap mask;
    double radius = 0.0;  // d = lambda * object height, metres
    ObjectExtent extent;
};

/// Masks every background pixel whose 3-D position lies within
/// d = lambda * (max_up - min_up) of the nearest object point; object pixels
/// are always masked; pixels above the object's top and inside its horizontal
/// footprint are never masked. Throws EmptyMask if obj_mask has no pixel >= 0.5.
InferenceMask build_inference_shading_mask(const FloatMap& obj_mask, const FloatMap& comp_depth,
                                           const CameraModel& camera, const MaskParams& params,
                                           Exec exec = Exec::parallel);

/// 15x15, sigma 1.5 Gaussian feather, clamped to [0,1].
FloatMap feather_object_mask(const FloatMap& mask);

/// Binary version of a mask (>= 0.5 -> 1).
FloatMap binarize(const FloatMap& mask);
std::size_t count_on(const FloatMap& mask);

}  // namespace icomp
