#include "cli.hpp"

#include <CLI11.hpp>
#include <omp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <ostream>
#include <sstream>

#include "icomp/compositor.hpp"
#include "icomp/evaluation.hpp"
#include "icomp/metrics.hpp"
#include "icomp/pfm.hpp"
#include "icomp/scene.hpp"

#ifndef ICOMP_VERSION
#define ICOMP_VERSION "unknown"
#endif

namespace icomp::cli {

namespace fs = std::filesystem;

namespace {

struct LightFlags {
    std::string scene_json;
    std::vector<double> direction;  // camera space
    double intensity = 1.0;
    double ambient = 0.25;

    LightSpec resolve() const {
        if (!scene_json.empty()) {
            std::ifstream in(scene_json);
            if (!in) throw Error(ErrorCode::Io, "cannot read " + scene_json);
            std::stringstream ss;
            ss << in.rdbuf();
            return scene_from_json(ss.str()).light();
        }
        LightSpec l;
        if (!direction.empty()) l.direction = normalize(Vec3{direction[0], direction[1], direction[2]});
        l.intensity = {intensity, intensity, intensity};
        l.ambient = {ambient, ambient, ambient};
        l.validate();
        return l;
    }

    void attach(CLI::App* app) {
        app->add_option("--scene-json", scene_json, "Take the analytic light from a scene.json");
        app->add_option("--light-dir", direction, "Camera-space direction toward the light")->expected(3);
        app->add_option("--light-intensity", intensity, "Directional intensity")->check(CLI::NonNegativeNumber);
        app->add_option("--ambient", ambient, "Ambient term")->check(CLI::NonNegativeNumber);
    }
};

struct Config {
    std::uint64_t seed = kDefaultSeed;
    double lambda = kDefaultLambda;
    int jobs = 0;
    std::string renderer = "analytic";
    int timeout = 600;
    LightFlags light;
};

std::unique_ptr<Renderer> make_renderer(const Config& cfg) {
    if (cfg.renderer == "analytic") return std::make_unique<AnalyticRenderer>(cfg.light.resolve());
    const std::string prefix = "external:";
    if (cfg.renderer.rfind(prefix, 0) == 0 && cfg.renderer.size() > prefix.size()) {
        return std::make_unique<ExternalRenderer>(cfg.renderer.substr(prefix.size()), std::chrono::seconds(cfg.timeout));
    }
    throw CLI::ValidationError("--renderer", "expected 'analytic' or 'external:<path>'");
}

void repro_line(std::ostream& out, const Config& cfg, const std::string& command) {
    out << "# icomp " << ICOMP_VERSION << " command=" << command << " seed=" << cfg.seed << " lambda=" << cfg.lambda
        << " renderer=" << cfg.renderer << " threads=" << max_threads() << '\n';
}

void ensure_parent(const std::string& file) {
    const fs::path parent = fs::path(file).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
}

FloatMap background_image_for(const fs::path& dir, const IntrinsicBundle& bundle) {
    if (fs::exists(dir / "image.pfm")) return read_pfm(dir / "image.pfm");
    return reconstruct_image(bundle.albedo, bundle.shading);
}

// --- subcommands ---

struct ComposeArgs {
    std::string bg, obj, mask, out;
    bool intermediates = false;
    std::string footprint = "projected";
    std::string fit = "robust";
};

int run_compose(const ComposeArgs& a, const Config& cfg, std::ostream& out) {
    CompositeInputs in;
    in.background = read_bundle(a.bg);
    in.background_image = background_image_for(a.bg, in.background);
    in.object = read_bundle(a.obj, false);
    in.object_mask = read_pfm(a.mask);
    in.params = MaskParams{cfg.lambda, cfg.seed};
    in.footprint = a.footprint == "lowest-pixel" ? FootprintMode::lowest_pixel : FootprintMode::vertical_projection;
    in.alignment_fit = a.fit == "lsq" ? AlignmentFit::least_squares : AlignmentFit::robust;

    const auto renderer = make_renderer(cfg);
    const PipelineResult r = compose_pipeline(in, *renderer);
    ensure_parent(a.out);
    write_pfm(a.out, r.composite);
    if (a.intermediates && !r.empty_object) {
        const fs::path dir = fs::path(a.out).parent_path();
        write_pfm(dir / "ratio.pfm", r.ratio);
        write_pfm(dir / "shading_mask.pfm", r.intrinsics.shading_mask);
        write_pfm(dir / "feathered_mask.pfm", r.feathered_mask);
        write_pfm(dir / "render_comp.pfm", r.render_comp);
        write_pfm(dir / "render_bg.pfm", r.render_bg);
        write_bundle(dir / "icomp", r.intrinsics.bundle);
    }
    out << "wrote " << a.out;
    if (!r.empty_object) {
        out << " (alignment a=" << r.intrinsics.alignment.scale << " b=" << r.intrinsics.alignment.offset
            << ", radius " << r.intrinsics.inference.radius << ", C=" << r.color_balance.r << ',' << r.color_balance.g
            << ',' << r.color_balance.b << ')';
    }
    out << '\n';
    return 0;
}

struct RenderArgs {
    std::string bundle, shading_mask, out;
    bool check_contract = false;
};

int run_render(const RenderArgs& a, const Config& cfg, std::ostream& out) {
    RenderRequest req;
    req.bundle = read_bundle(a.bundle);
    req.seed = cfg.seed;
    if (!a.shading_mask.empty()) {
        req.shading_mask = read_pfm(a.shading_mask);
    } else if (a.check_contract) {
        // a training-style mask, so both known and unknown shading occur
        req.shading_mask = sample_training_mask(req.bundle.width(), req.bundle.height(), cfg.seed).mask;
        if (count_on(req.shading_mask) == 0) req.shading_mask = FloatMap(req.bundle.width(), req.bundle.height(), 1, 1.0f);
    } else {
        req.shading_mask = FloatMap(req.bundle.width(), req.bundle.height(), 1, 0.0f);
    }
    const auto renderer = make_renderer(cfg);
    if (a.check_contract) {
        const ContractReport rep = check_renderer_contract(*renderer, req);
        out << "contract " << renderer->id() << ": deterministic=" << rep.deterministic
            << " dimensions=" << rep.dimensions_match << " known_shading=" << rep.preserves_known_shading
            << " max_known_error=" << rep.max_known_error << " -> " << (rep.passed() ? "PASS" : "FAIL") << '\n';
        if (!rep.passed()) return 2;
    }
    if (!a.out.empty()) {
        ensure_parent(a.out);
        write_pfm(a.out, renderer->render(req));
        out << "wrote " << a.out << '\n';
    }
    return 0;
}

struct MaskArgs {
    std::string bundle, mask, out;
    bool training = false;
    int width = 512, height = 512;
};

int run_mask(const MaskArgs& a, const Config& cfg, std::ostream& out) {
    ensure_parent(a.out);
    if (a.training) {
        const TrainingMask t = sample_training_mask(a.width, a.height, cfg.seed);
        write_pfm(a.out, t.mask);
        const char* names[] = {"shapes", "remove_all", "keep_all"};
        out << "wrote " << a.out << " branch=" << names[static_cast<int>(t.branch)] << '\n';
        return 0;
    }
    if (a.bundle.empty() || a.mask.empty()) throw CLI::ValidationError("mask", "--bundle and --mask are required");
    const IntrinsicBundle b = read_bundle(a.bundle, false);
    const InferenceMask m = build_inference_shading_mask(binarize(read_pfm(a.mask)), b.depth, b.camera,
                                                         MaskParams{cfg.lambda, cfg.seed});
    write_pfm(a.out, m.mask);
    out << "wrote " << a.out << " radius=" << m.radius << " height=" << m.extent.height
        << " unknown=" << m.mask.pixel_count() - count_on(m.mask) << '\n';
    return 0;
}

struct GenArgs {
    int count = 20;
    std::string out;
    int width = 256, height = 256;
};

int run_gen_scenes(const GenArgs& a, const Config& cfg, std::ostream& out) {
    fs::create_directories(a.out);
    std::vector<std::string> errors(static_cast<std::size_t>(a.count));
    const int workers = cfg.jobs > 0 ? cfg.jobs : max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers)
    for (int i = 0; i < a.count; ++i) {
        try {
            std::ostringstream name;
            name << "scene_" << std::setw(4) << std::setfill('0') << i;
            const GeneratedScene s = generate_scene(random_scene_spec(cfg.seed + i, a.width, a.height));
            write_generated_scene(fs::path(a.out) / name.str(), s);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (int i = 0; i < a.count; ++i) {
        if (!errors[i].empty()) throw Error(ErrorCode::Io, "scene " + std::to_string(i) + ": " + errors[i]);
    }
    out << "wrote " << a.count << " scenes to " << a.out << " (seeds " << cfg.seed << ".." << cfg.seed + a.count - 1
        << ")\n";
    return 0;
}

struct EvalArgs {
    std::string pred, ref, out;
    double ppd = kFlipDefaultPpd;
};

int run_evaluate(const EvalArgs& a, std::ostream& out) {
    const auto reports = evaluate_directories(a.pred, a.ref, a.ppd);
    if (!a.out.empty()) {
        ensure_parent(a.out);
        write_report_csv(a.out, reports);
        out << "wrote " << a.out << '\n';
    }
    out << report_csv_header() << '\n';
    for (const auto& r : reports) out << report_csv_row(r) << '\n';
    out << report_csv_row(aggregate(reports)) << '\n';
    return 0;
}

struct StudyArgs {
    long k = 0, n = 0;
    std::string method = "wald";
    double level = 0.95;
};

int run_study(const StudyArgs& a, std::ostream& out) {
    const ConfusionInterval ci = binomial_confusion_interval(
        {a.n, a.k}, a.level, a.method == "wilson" ? IntervalMethod::wilson : IntervalMethod::wald);
    out << std::fixed << std::setprecision(2) << "rate " << 100.0 * ci.rate << "% +/- " << 100.0 * ci.half_width
        << " points (" << a.method << ", " << 100.0 * a.level << "%): [" << 100.0 * ci.lower << ", "
        << 100.0 * ci.upper << "]\n";
    return 0;
}

struct AblateArgs {
    int count = 8;
    std::vector<double> lambdas{0.5, 1.0, 1.5};
    int width = 256, height = 256;
    std::vector<double> elevation;  // optional override, degrees
};

int run_ablate(const AblateArgs& a, const Config& cfg, std::ostream& out) {
    std::vector<GeneratedScene> scenes;
    for (int i = 0; i < a.count; ++i) {
        SceneSpec spec = random_scene_spec(cfg.seed + i, a.width, a.height);
        if (!a.elevation.empty()) {
            const Vec3 d = spec.light_direction_world;
            const double horiz = std::hypot(d.x, d.z);
            const double e = a.elevation[0] * 3.14159265358979323846 / 180.0;
            spec.light_direction_world = {d.x / horiz * std::cos(e), std::sin(e), d.z / horiz * std::cos(e)};
        }
        scenes.push_back(generate_scene(spec));
    }
    out << "lambda,psnr,flip,iou_mean,iou_pooled,unknown_fraction\n";
    for (const double lambda : a.lambdas) {
        double p = 0.0, f = 0.0, iou = 0.0, unknown = 0.0;
        std::size_t inter = 0, uni = 0;
        for (const auto& s : scenes) {
            const SceneOutcome o = run_scene_oracle(s, MaskParams{lambda, cfg.seed});
            p += o.psnr;
            f += o.flip;
            iou += o.shadow.iou();
            inter += o.shadow.intersection;
            uni += o.shadow.uni;
            unknown += static_cast<double>(o.masked_pixels) / s.object_mask.pixel_count();
        }
        const double n = static_cast<double>(scenes.size());
        out << lambda << ',' << p / n << ',' << f / n << ',' << iou / n << ','
            << (uni ? static_cast<double>(inter) / uni : 1.0) << ',' << unknown / n << '\n';
    }
    return 0;
}

}  // namespace

int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Intrinsic-space object compositing with an analytic or external renderer", "icomp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ICOMP_VERSION);

    Config cfg;
    app.add_option("--seed", cfg.seed, "Renderer seed (and base seed for generated scenes)")->capture_default_str();
    app.add_option("--lambda", cfg.lambda, "Relative shading radius")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--jobs", cfg.jobs, "Worker threads (0 = all)")->check(CLI::NonNegativeNumber);
    app.fallthrough();

    auto add_renderer_flags = [&](CLI::App* sub) {
        sub->add_option("--renderer", cfg.renderer, "analytic | external:<path>")->capture_default_str();
        sub->add_option("--timeout", cfg.timeout, "External renderer timeout, seconds")->check(CLI::PositiveNumber);
        cfg.light.attach(sub);
    };

    ComposeArgs compose;
    auto* c = app.add_subcommand("compose", "Insert an object into a background");
    c->add_option("--bg", compose.bg, "Background bundle directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--obj", compose.obj, "Object bundle directory")->required()->check(CLI::ExistingDirectory);
    c->add_option("--mask", compose.mask, "Object mask PFM")->required()->check(CLI::ExistingFile);
    c->add_option("--out", compose.out, "Output composite PFM")->required();
    c->add_flag("--emit-intermediates", compose.intermediates, "Also write ratio, masks, renders and the icomp/ bundle");
    c->add_option("--footprint", compose.footprint, "Depth footprint")
        ->check(CLI::IsMember({"projected", "lowest-pixel"}))->capture_default_str();
    c->add_option("--fit", compose.fit, "Depth fit")->check(CLI::IsMember({"robust", "lsq"}))->capture_default_str();
    add_renderer_flags(c);

    RenderArgs render;
    auto* r = app.add_subcommand("render", "One renderer pass over a bundle");
    r->add_option("--bundle", render.bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    r->add_option("--shading-mask", render.shading_mask, "Known-shading mask PFM (default: all unknown)")
        ->check(CLI::ExistingFile);
    r->add_option("--out", render.out, "Output PFM");
    r->add_flag("--check-contract", render.check_contract, "Run the renderer contract checks");
    add_renderer_flags(r);

    MaskArgs mask;
    auto* m = app.add_subcommand("mask", "Inference shading mask, or a training mask with --training");
    m->add_option("--bundle", mask.bundle, "Composite bundle directory (depth + manifest)")->check(CLI::ExistingDirectory);
    m->add_option("--mask", mask.mask, "Object mask PFM")->check(CLI::ExistingFile);
    m->add_option("--out", mask.out, "Output mask PFM")->required();
    m->add_flag("--training", mask.training, "Sample a training mask instead");
    m->add_option("--width", mask.width)->check(CLI::PositiveNumber);
    m->add_option("--height", mask.height)->check(CLI::PositiveNumber);

    GenArgs gen;
    auto* g = app.add_subcommand("gen-scenes", "Procedural scenes with ground truth");
    g->add_option("--count", gen.count)->check(CLI::PositiveNumber)->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->required();
    g->add_option("--width", gen.width)->check(CLI::PositiveNumber);
    g->add_option("--height", gen.height)->check(CLI::PositiveNumber);

    EvalArgs eval;
    auto* e = app.add_subcommand("evaluate", "Metrics over matching PFMs in two directories");
    e->add_option("--pred", eval.pred)->required()->check(CLI::ExistingDirectory);
    e->add_option("--ref", eval.ref)->required()->check(CLI::ExistingDirectory);
    e->add_option("--out", eval.out, "CSV report");
    e->add_option("--ppd", eval.ppd, "FLIP pixels per degree")->check(CLI::PositiveNumber);

    StudyArgs study;
    auto* s = app.add_subcommand("study", "Confidence interval for a forced-choice study");
    s->add_option("--k", study.k, "Times the composite was chosen")->required()->check(CLI::NonNegativeNumber);
    s->add_option("--n", study.n, "Total trials")->required()->check(CLI::PositiveNumber);
    s->add_option("--method", study.method)->check(CLI::IsMember({"wald", "wilson"}))->capture_default_str();
    s->add_option("--level", study.level)->check(CLI::Range(0.0, 1.0))->capture_default_str();

    AblateArgs ablate;
    auto* ab = app.add_subcommand("ablate-lambda", "Pipeline accuracy against the shading radius on generated scenes");
    ab->add_option("--count", ablate.count)->check(CLI::PositiveNumber)->capture_default_str();
    ab->add_option("--lambdas", ablate.lambdas)->delimiter(',');
    ab->add_option("--width", ablate.width)->check(CLI::PositiveNumber);
    ab->add_option("--height", ablate.height)->check(CLI::PositiveNumber);
    ab->add_option("--elevation", ablate.elevation, "Override light elevation, degrees")->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion& e) {
        out << e.what() << '\n';
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    if (cfg.jobs > 0) omp_set_num_threads(cfg.jobs);
    CLI::App* sub = app.get_subcommands().front();
    repro_line(out, cfg, sub->get_name());
    try {
        if (sub == c) return run_compose(compose, cfg, out);
        if (sub == r) return run_render(render, cfg, out);
        if (sub == m) return run_mask(mask, cfg, out);
        if (sub == g) return run_gen_scenes(gen, cfg, out);
        if (sub == e) return run_evaluate(eval, out);
        if (sub == s) return run_study(study, out);
        return run_ablate(ablate, cfg, out);
    } catch (const CLI::ValidationError& ex) {
        err << "error: " << ex.what() << '\n';
        return 1;
    } catch (const Error& ex) {
        err << "error [" << to_string(ex.code()) << "]: " << ex.what() << '\n';
        return 2;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return 2;
    }
}

}  // namespace icomp::cli
