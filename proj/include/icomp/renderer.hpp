#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "icomp/float_map.hpp"
#include "icomp/intrinsics.hpp"
#include "icomp/masks.hpp"
#include "icomp/parallel.hpp"
#include "icomp/vec3.hpp"

namespace icomp {

/// One renderer pass: intrinsic layers, the shading mask that says which
/// shading pixels are known (1) or must be synthesised (0), and the seed.
struct RenderRequest {
    IntrinsicBundle bundle;
    FloatMap shading_mask;
    std::uint64_t seed = kDefaultSeed;
};

/// The neural-renderer contract: deterministic in (bundle, seed), and where
/// shading_mask is 1 the output reproduces albedo * shading.
class Renderer {
public:
    virtual ~Renderer() = default;
    virtual std::string id() const = 0;
    virtual FloatMap render(const RenderRequest& request) const = 0;
};

/// Directional light in camera space; direction points from the surface
/// toward the light.
struct LightSpec {
    Vec3 direction = normalize(Vec3{0.4, -0.8, -0.45});
    Rgb intensity{1.0, 1.0, 1.0};
    Rgb ambient{0.25, 0.25, 0.25};

    void validate() const;
};

struct VisibilityParams {
    double bias = 1e-2;          // metres
    double step_scale = 0.5;     // fraction of the median pixel footprint
    double max_distance = 0.0;   // metres; 0 = 2 x max depth
};

/// Height-field shadow test: 1 where the light is visible, 0 where the march
/// toward the light passes behind the stored depth by more than the bias.
FloatMap shadow_visibility(const FloatMap& positions, const FloatMap& depth, const CameraModel& camera,
                           const LightSpec& light, const VisibilityParams& params = {},
                           Exec exec = Exec::parallel);

/// March step used by shadow_visibility for this depth map.
double visibility_step(const FloatMap& depth, const CameraModel& camera, const VisibilityParams& params);

/// Shading layer of analytic_render: ambient + intensity * max(0, n.l) * V on
/// masked pixels, the input shading elsewhere.
FloatMap analytic_shading(const IntrinsicBundle& bundle, const FloatMap& shading_mask, const LightSpec& light,
                          const VisibilityParams& params = {}, Exec exec = Exec::parallel);

/// Lambertian shading + hard shadows on masked pixels, input shading on the
/// rest; returns albedo * shading. An empty shading_mask means "all unknown".
FloatMap analytic_render(const IntrinsicBundle& bundle, const FloatMap& shading_mask, const LightSpec& light,
                         const VisibilityParams& params = {}, Exec exec = Exec::parallel);

class AnalyticRenderer final : public Renderer {
public:
    explicit AnalyticRenderer(LightSpec light, VisibilityParams params = {})
        : light_(light), params_(params) {}

    std::string id() const override { return "analytic"; }
    FloatMap render(const RenderRequest& request) const override;

    const LightSpec& light() const { return light_; }

private:
    LightSpec light_;
    VisibilityParams params_;
};

/// Bridge to an out-of-process renderer:
///   <exe> <bundle_dir> <output_pfm> --seed <int>
/// bundle_dir holds the bundle layout plus shading_mask.pfm; the executable
/// must exit 0 and leave a 3-channel PFM of the input size at output_pfm.
class ExternalRenderer final : public Renderer {
public:
    explicit ExternalRenderer(std::filesystem::path executable,
                              std::chrono::seconds timeout = std::chrono::seconds(600));

    std::string id() const override;
    FloatMap render(const RenderRequest& request) const override;

private:
    std::filesystem::path executable_;
    std::chrono::seconds timeout_;
};

/// Raised by ExternalRenderer; carries the child's exit code when it ran.
class RendererError : public Error {
public:
    RendererError(ErrorCode code, const std::string& message, int exit_code = -1)
        : Error(code, message), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

struct ContractReport {
    bool deterministic = false;
    bool dimensions_match = false;
    bool preserves_known_shading = false;
    double max_known_error = 0.0;
    bool passed() const { return deterministic && dimensions_match && preserves_known_shading; }
};

/// Runs the renderer twice on `request` and checks the contract.
ContractReport check_renderer_contract(const Renderer& renderer, const RenderRequest& request,
                                       double tolerance = 1e-5);

}  // namespace icomp
