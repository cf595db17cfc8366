// Serial reference vs OpenMP path for the per-pixel kernels.
//   ./icomp-bench --benchmark_filter=Blur

#include <benchmark/benchmark.h>

#include "icomp/image_ops.hpp"
#include "icomp/masks.hpp"
#include "icomp/metrics.hpp"
#include "icomp/renderer.hpp"
#include "icomp/scene.hpp"

using namespace icomp;

namespace {

const GeneratedScene& scene() {
    static const GeneratedScene s = generate_scene(random_scene_spec(469, 256, 256));
    return s;
}

Exec mode(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& state) {
    state.SetLabel(state.range(0) ? "openmp x" + std::to_string(max_threads()) : "serial");
}

void BM_Blur(benchmark::State& state) {
    const FloatMap img = scene().composite_image;
    for (auto _ : state) benchmark::DoNotOptimize(gaussian_blur(img, kFeatherKernel, kFeatherSigma, mode(state)));
    label(state);
}

void BM_InferenceMask(benchmark::State& state) {
    const GeneratedScene& s = scene();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            build_inference_shading_mask(s.object_mask, s.full.depth, s.full.camera, MaskParams{}, mode(state)));
    label(state);
}

void BM_Visibility(benchmark::State& state) {
    const GeneratedScene& s = scene();
    const FloatMap pos = unproject_depth(s.full.depth, s.full.camera);
    for (auto _ : state)
        benchmark::DoNotOptimize(shadow_visibility(pos, s.full.depth, s.full.camera, s.spec.light(), {}, mode(state)));
    label(state);
}

void BM_Ssim(benchmark::State& state) {
    const GeneratedScene& s = scene();
    for (auto _ : state) benchmark::DoNotOptimize(ssim(s.composite_image, s.background_image, mode(state)));
    label(state);
}

void BM_Flip(benchmark::State& state) {
    const GeneratedScene& s = scene();
    for (auto _ : state)
        benchmark::DoNotOptimize(flip(s.composite_image, s.background_image, kFlipDefaultPpd, mode(state)));
    label(state);
}

}  // namespace

BENCHMARK(BM_Blur)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_InferenceMask)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Visibility)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Ssim)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Flip)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
