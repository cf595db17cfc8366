#include "icomp/renderer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <random>
#include <thread>

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include "icomp/pfm.hpp"
#include "icomp/intrinsics.hpp"

extern char** environ;

namespace icomp {

namespace fs = std::filesystem;

void LightSpec::validate() const {
    if (std::abs(length(direction) - 1.0) > 1e-6) throw Error(ErrorCode::InvalidArgument, "light direction must be unit length");
    for (int c = 0; c < 3; ++c) {
        if (intensity[c] < 0.0 || ambient[c] < 0.0) throw Error(ErrorCode::InvalidArgument, "light colors must be non-negative");
    }
}

double visibility_step(const FloatMap& depth, const CameraModel& camera, const VisibilityParams& params) {
    std::vector<float> d(depth.data().begin(), depth.data().end());
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return params.step_scale * (*mid) / camera.focal();
}

namespace {

class HeightFieldMarcher {
public:
    HeightFieldMarcher(const FloatMap& depth, const CameraModel& camera, const LightSpec& light,
                       const VisibilityParams& params)
        : depth_(depth), camera_(camera), light_(light.direction), bias_(params.bias) {
        step_ = visibility_step(depth, camera, params);
        max_distance_ = params.max_distance > 0.0
                            ? params.max_distance
                            : 2.0 * *std::max_element(depth.data().begin(), depth.data().end());
        focal_ = camera.focal();
        cx_ = camera.principal_x();
        cy_ = camera.principal_y();
    }

    float visible(const Vec3& origin) const {
        const int w = depth_.width();
        const int h = depth_.height();
        for (int k = 1;; ++k) {
            const double t = k * step_;
            if (t > max_distance_) return 1.0f;
            const Vec3 s = origin + light_ * t;
            if (s.z <= 1e-6) return 1.0f;
            const double u = s.x * focal_ / s.z + cx_;
            const double v = s.y * focal_ / s.z + cy_;
            const long ui = std::lround(u);
            const long vi = std::lround(v);
            if (ui < 0 || vi < 0 || ui >= w || vi >= h) return 1.0f;
            if (s.z > depth_.at(static_cast<int>(ui), static_cast<int>(vi)) + bias_) return 0.0f;
        }
    }

private:
    const FloatMap& depth_;
    const CameraModel& camera_;
    Vec3 light_;
    double bias_;
    double step_ = 0.0;
    double max_distance_ = 0.0;
    double focal_ = 1.0, cx_ = 0.0, cy_ = 0.0;
};

Vec3 pixel_vec(const FloatMap& map, int x, int y) { return {map.at(x, y, 0), map.at(x, y, 1), map.at(x, y, 2)}; }

}  // namespace

FloatMap shadow_visibility(const FloatMap& positions, const FloatMap& depth, const CameraModel& camera,
                           const LightSpec& light, const VisibilityParams& params, Exec exec) {
    require_same_size(positions, depth, "shadow_visibility");
    if (positions.channels() != 3) throw Error(ErrorCode::InvalidArgument, "positions must have 3 channels");
    const HeightFieldMarcher marcher(depth, camera, light, params);
    FloatMap out(depth.width(), depth.height(), 1);
    for_rows(depth.height(), exec, [&](int y) {
        for (int x = 0; x < depth.width(); ++x) out.at(x, y) = marcher.visible(pixel_vec(positions, x, y));
    });
    return out;
}

FloatMap analytic_shading(const IntrinsicBundle& bundle, const FloatMap& shading_mask, const LightSpec& light,
                          const VisibilityParams& params, Exec exec) {
    light.validate();
    const int w = bundle.width();
    const int h = bundle.height();
    const bool all_unknown = shading_mask.empty();
    if (!all_unknown) require_same_size(shading_mask, bundle.depth, "analytic_render shading mask");

    const FloatMap positions = unproject_depth(bundle.depth, bundle.camera);
    const HeightFieldMarcher marcher(bundle.depth, bundle.camera, light, params);
    FloatMap out(w, h, 3);
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            if (!all_unknown && shading_mask.at(x, y) >= 0.5f) {
                for (int c = 0; c < 3; ++c) out.at(x, y, c) = bundle.shading.at(x, y, c);
                continue;
            }
            const double ndotl = std::max(0.0, dot(pixel_vec(bundle.normals, x, y), light.direction));
            const double v = ndotl > 0.0 ? marcher.visible(pixel_vec(positions, x, y)) : 0.0;
            for (int c = 0; c < 3; ++c) {
                out.at(x, y, c) = static_cast<float>(light.ambient[c] + light.intensity[c] * ndotl * v);
            }
        }
    });
    return out;
}

FloatMap analytic_render(const IntrinsicBundle& bundle, const FloatMap& shading_mask, const LightSpec& light,
                         const VisibilityParams& params, Exec exec) {
    return reconstruct_image(bundle.albedo, analytic_shading(bundle, shading_mask, light, params, exec));
}

FloatMap AnalyticRenderer::render(const RenderRequest& request) const {
    return analytic_render(request.bundle, request.shading_mask, light_, params_);
}

// --- external bridge ---

namespace {

class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        for (int attempt = 0; attempt < 16; ++attempt) {
            path_ = fs::temp_directory_path() /
                    ("icomp-render-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + "-" +
                     std::to_string(rd()));
            if (fs::create_directory(path_)) return;
        }
        throw Error(ErrorCode::Io, "cannot create a temporary directory");
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

}  // namespace

ExternalRenderer::ExternalRenderer(fs::path executable, std::chrono::seconds timeout)
    : executable_(std::move(executable)), timeout_(timeout) {}

std::string ExternalRenderer::id() const { return "external:" + executable_.string(); }

FloatMap ExternalRenderer::render(const RenderRequest& request) const {
    if (!fs::exists(executable_)) {
        throw RendererError(ErrorCode::RendererFailure, "renderer executable not found: " + executable_.string());
    }
    require_same_size(request.shading_mask, request.bundle.depth, "render request shading mask");

    TempDir tmp;
    const fs::path bundle_dir = tmp.path() / "bundle";
    const fs::path output = tmp.path() / "output.pfm";
    write_bundle(bundle_dir, request.bundle);
    write_pfm(bundle_dir / "shading_mask.pfm", request.shading_mask);

    std::vector<std::string> args = {executable_.string(), bundle_dir.string(), output.string(), "--seed",
                                     std::to_string(request.seed)};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    argv.push_back(nullptr);

    pid_t pid = 0;
    if (const int rc = posix_spawn(&pid, executable_.c_str(), nullptr, nullptr, argv.data(), environ); rc != 0) {
        throw RendererError(ErrorCode::RendererFailure,
                            "cannot launch " + executable_.string() + ": " + std::strerror(rc));
    }

    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    int status = 0;
    for (;;) {
        const pid_t done = ::waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0) throw RendererError(ErrorCode::RendererFailure, "waitpid failed for renderer process");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            throw RendererError(ErrorCode::Timeout, "renderer timed out after " + std::to_string(timeout_.count()) + " s");
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    if (WIFSIGNALED(status)) {
        throw RendererError(ErrorCode::RendererFailure, "renderer killed by signal " + std::to_string(WTERMSIG(status)));
    }
    const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (code != 0) {
        throw RendererError(ErrorCode::RendererFailure, "renderer exited with code " + std::to_string(code), code);
    }
    if (!fs::exists(output)) throw RendererError(ErrorCode::RendererFailure, "renderer produced no output file", 0);

    FloatMap result;
    try {
        result = read_pfm(output);
    } catch (const Error& e) {
        throw RendererError(ErrorCode::RendererFailure, std::string("unreadable renderer output: ") + e.what(), 0);
    }
    if (result.channels() != 3 || !result.same_size(request.bundle.depth)) {
        throw RendererError(ErrorCode::DimensionMismatch,
                            "renderer output is " + std::to_string(result.width()) + "x" +
                                std::to_string(result.height()) + "x" + std::to_string(result.channels()) +
                                ", expected " + std::to_string(request.bundle.width()) + "x" +
                                std::to_string(request.bundle.height()) + "x3",
                            0);
    }
    return result;
}

ContractReport check_renderer_contract(const Renderer& renderer, const RenderRequest& request, double tolerance) {
    if (request.shading_mask.empty()) throw Error(ErrorCode::InvalidArgument, "contract check needs a shading mask");
    ContractReport report;
    const FloatMap first = renderer.render(request);
    const FloatMap second = renderer.render(request);
    report.deterministic = first == second;
    report.dimensions_match = first.channels() == 3 && first.same_size(request.bundle.depth);
    if (!report.dimensions_match) return report;
    double worst = 0.0;
    for (int y = 0; y < first.height(); ++y) {
        for (int x = 0; x < first.width(); ++x) {
            if (request.shading_mask.at(x, y) < 0.5f) continue;
            for (int c = 0; c < 3; ++c) {
                const double expected =
                    static_cast<double>(request.bundle.albedo.at(x, y, c)) * request.bundle.shading.at(x, y, c);
                worst = std::max(worst, std::abs(first.at(x, y, c) - expected) / std::max(1.0, std::abs(expected)));
            }
        }
    }
    report.max_known_error = worst;
    report.preserves_known_shading = worst <= tolerance;
    return report;
}

}  // namespace icomp
