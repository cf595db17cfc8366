#include "icomp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

#include "icomp/error.hpp"
#include "icomp/image_ops.hpp"
#include "icomp/pfm.hpp"

namespace icomp {

namespace fs = std::filesystem;

namespace {

// Row partial sums added in row order, so the result does not depend on the
// thread count.
template <class RowSum>
double sum_rows(int rows, Exec exec, RowSum&& row_sum) {
    std::vector<double> partial(static_cast<std::size_t>(rows), 0.0);
    for_rows(rows, exec, [&](int y) { partial[static_cast<std::size_t>(y)] = row_sum(y); });
    double total = 0.0;
    for (const double v : partial) total += v;
    return total;
}

void check_pair(const FloatMap& pred, const FloatMap& ref) {
    require_same_size(pred, ref, "metric", /*same_channels=*/true);
    if (pred.empty()) throw Error(ErrorCode::InvalidArgument, "metric on empty image");
}

}  // namespace

double rmse(const FloatMap& pred, const FloatMap& ref) {
    check_pair(pred, ref);
    const auto p = pred.data();
    const auto r = ref.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - r[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(p.size()));
}

double mae(const FloatMap& pred, const FloatMap& ref) {
    check_pair(pred, ref);
    const auto p = pred.data();
    const auto r = ref.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(static_cast<double>(p[i]) - r[i]);
    return acc / static_cast<double>(p.size());
}

double psnr_from_rmse(double rmse_value) {
    if (rmse_value < 0.0 || !std::isfinite(rmse_value)) throw Error(ErrorCode::InvalidArgument, "rmse must be finite and >= 0");
    if (rmse_value == 0.0) return std::numeric_limits<double>::infinity();
    return -20.0 * std::log10(rmse_value);
}

double psnr(const FloatMap& pred, const FloatMap& ref) { return psnr_from_rmse(rmse(pred, ref)); }

double optimal_scale(const FloatMap& pred, const FloatMap& ref) {
    check_pair(pred, ref);
    const auto p = pred.data();
    const auto r = ref.data();
    double pr = 0.0, pp = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        pr += static_cast<double>(p[i]) * r[i];
        pp += static_cast<double>(p[i]) * p[i];
    }
    return pp > 0.0 ? pr / pp : 0.0;
}

double si_rmse(const FloatMap& pred, const FloatMap& ref) {
    const double alpha = optimal_scale(pred, ref);
    const auto p = pred.data();
    const auto r = ref.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = alpha * p[i] - r[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(p.size()));
}

double ssim(const FloatMap& pred, const FloatMap& ref, Exec exec) {
    check_pair(pred, ref);
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const FloatMap a = pred.channels() == 1 ? pred : to_grayscale(pred);
    const FloatMap b = ref.channels() == 1 ? ref : to_grayscale(ref);
    const int w = a.width(), h = a.height();
    if (w < kWin || h < kWin) throw Error(ErrorCode::InvalidArgument, "ssim needs images of at least 11x11");

    std::vector<double> g(kWin);
    double gsum = 0.0;
    for (int i = 0; i < kWin; ++i) {
        const double x = i - kWin / 2;
        g[i] = std::exp(-x * x / (2.0 * kSigma * kSigma));
        gsum += g[i];
    }
    for (double& v : g) v /= gsum;

    const int ow = w - kWin + 1, oh = h - kWin + 1;
    const double total = sum_rows(oh, exec, [&](int y0) {
        double row_acc = 0.0;
        for (int x0 = 0; x0 < ow; ++x0) {
            double mu_a = 0, mu_b = 0, saa = 0, sbb = 0, sab = 0;
            for (int j = 0; j < kWin; ++j) {
                for (int i = 0; i < kWin; ++i) {
                    const double wt = g[j] * g[i];
                    const double va = a.at(x0 + i, y0 + j);
                    const double vb = b.at(x0 + i, y0 + j);
                    mu_a += wt * va;
                    mu_b += wt * vb;
                    saa += wt * va * va;
                    sbb += wt * vb * vb;
                    sab += wt * va * vb;
                }
            }
            const double var_a = saa - mu_a * mu_a;
            const double var_b = sbb - mu_b * mu_b;
            const double cov = sab - mu_a * mu_b;
            row_acc += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                       ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        }
        return row_acc;
    });
    return total / (static_cast<double>(ow) * oh);
}

// --- FLIP (LDR) ---

namespace {

struct Col3 {
    float x = 0, y = 0, z = 0;
};

constexpr float kQc = 0.7f;
constexpr float kPc = 0.4f;
constexpr float kPt = 0.95f;
constexpr float kW = 0.082f;
constexpr float kQf = 0.5f;
constexpr Col3 kD65{0.950428545377181f, 1.0f, 1.088900370798128f};

Col3 linear_to_xyz(Col3 v) {
    constexpr float a11 = 10135552.0f / 24577794.0f, a12 = 8788810.0f / 24577794.0f, a13 = 4435075.0f / 24577794.0f;
    constexpr float a21 = 2613072.0f / 12288897.0f, a22 = 8788810.0f / 12288897.0f, a23 = 887015.0f / 12288897.0f;
    constexpr float a31 = 1425312.0f / 73733382.0f, a32 = 8788810.0f / 73733382.0f, a33 = 70074185.0f / 73733382.0f;
    return {a11 * v.x + a12 * v.y + a13 * v.z, a21 * v.x + a22 * v.y + a23 * v.z, a31 * v.x + a32 * v.y + a33 * v.z};
}

Col3 xyz_to_linear(Col3 v) {
    return {3.241003232976358f * v.x - 1.537398969488785f * v.y - 0.498615881996363f * v.z,
            -0.969224252202516f * v.x + 1.875929983695176f * v.y + 0.041554226340085f * v.z,
            0.055639419851975f * v.x - 0.204011206123910f * v.y + 1.057148977187533f * v.z};
}

Col3 xyz_to_ycxcz(Col3 v) {
    const float x = v.x / kD65.x, y = v.y / kD65.y, z = v.z / kD65.z;
    return {116.0f * y - 16.0f, 500.0f * (x - y), 200.0f * (y - z)};
}

Col3 ycxcz_to_xyz(Col3 v) {
    const float yy = (v.x + 16.0f) / 116.0f;
    return {(yy + v.y / 500.0f) * kD65.x, yy * kD65.y, (yy - v.z / 200.0f) * kD65.z};
}

float lab_f(float t) { return t > 0.008856f ? std::cbrt(t) : 7.787f * t + 16.0f / 116.0f; }

Col3 xyz_to_lab(Col3 v) {
    const float fx = lab_f(std::abs(v.x) / kD65.x);
    const float fy = lab_f(std::abs(v.y) / kD65.y);
    const float fz = lab_f(std::abs(v.z) / kD65.z);
    return {116.0f * fy - 16.0f, 500.0f * (fx - fy), 200.0f * (fy - fz)};
}

Col3 hunt(Col3 lab) { return {lab.x, 0.01f * lab.x * lab.y, 0.01f * lab.x * lab.z}; }

float hyab(Col3 a, Col3 b) {
    return std::abs(a.x - b.x) + std::sqrt((a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

float gauss_sum(float x2, float a1, float b1, float a2, float b2) {
    const float pi = std::numbers::pi_v<float>;
    const float pi2 = pi * pi;
    return a1 * std::sqrt(pi / b1) * std::exp(-pi2 * x2 / b1) + a2 * std::sqrt(pi / b2) * std::exp(-pi2 * x2 / b2);
}

struct Kernel {
    int radius = 0;
    std::vector<Col3> taps;  // (2r+1)^2, row-major
    const Col3& at(int dx, int dy) const {
        const int n = 2 * radius + 1;
        return taps[static_cast<std::size_t>(dy + radius) * n + dx + radius];
    }
};

Kernel csf_kernel(float ppd) {
    const Col3 a1{1.0f, 1.0f, 34.1f}, b1{0.0047f, 0.0053f, 0.04f};
    const Col3 a2{0.0f, 0.0f, 13.5f}, b2{1.0e-5f, 1.0e-5f, 0.025f};
    const float pi2 = std::numbers::pi_v<float> * std::numbers::pi_v<float>;
    const float max_b = std::max({b1.x, b1.y, b1.z, b2.x, b2.y, b2.z});
    Kernel k;
    k.radius = static_cast<int>(std::ceil(3.0f * std::sqrt(max_b / (2.0f * pi2)) * ppd));
    const int n = 2 * k.radius + 1;
    k.taps.resize(static_cast<std::size_t>(n) * n);
    const float dx = 1.0f / ppd;
    Col3 sum;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const float ix = (x - k.radius) * dx, iy = (y - k.radius) * dx;
            const float d2 = ix * ix + iy * iy;
            Col3 v{gauss_sum(d2, a1.x, b1.x, a2.x, b2.x), gauss_sum(d2, a1.y, b1.y, a2.y, b2.y),
                   gauss_sum(d2, a1.z, b1.z, a2.z, b2.z)};
            k.taps[static_cast<std::size_t>(y) * n + x] = v;
            sum.x += v.x;
            sum.y += v.y;
            sum.z += v.z;
        }
    }
    for (Col3& v : k.taps) v = {v.x / sum.x, v.y / sum.y, v.z / sum.z};
    return k;
}

// x holds the horizontal filter, y the vertical one.
Kernel detection_kernel(float ppd, bool point) {
    const float sd = 0.5f * kW * ppd;
    Kernel k;
    k.radius = static_cast<int>(std::ceil(3.0f * sd));
    const int n = 2 * k.radius + 1;
    k.taps.resize(static_cast<std::size_t>(n) * n);
    float pos_x = 0, neg_x = 0, pos_y = 0, neg_y = 0;
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const float xx = static_cast<float>(x - k.radius), yy = static_cast<float>(y - k.radius);
            const float g = std::exp(-(xx * xx + yy * yy) / (2.0f * sd * sd));
            const float wx = point ? (xx * xx / (sd * sd) - 1.0f) * g : -xx * g;
            const float wy = point ? (yy * yy / (sd * sd) - 1.0f) * g : -yy * g;
            k.taps[static_cast<std::size_t>(y) * n + x] = {wx, wy, 0.0f};
            (wx > 0.0f ? pos_x : neg_x) += std::abs(wx);
            (wy > 0.0f ? pos_y : neg_y) += std::abs(wy);
        }
    }
    for (Col3& v : k.taps) v = {v.x / (v.x > 0.0f ? pos_x : neg_x), v.y / (v.y > 0.0f ? pos_y : neg_y), 0.0f};
    return k;
}

// Dense per-channel convolution, replicate borders.
std::vector<Col3> convolve(const std::vector<Col3>& src, int w, int h, const Kernel& k, Exec exec) {
    std::vector<Col3> dst(src.size());
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            Col3 acc;
            for (int dy = -k.radius; dy <= k.radius; ++dy) {
                const int yy = std::clamp(y + dy, 0, h - 1);
                for (int dx = -k.radius; dx <= k.radius; ++dx) {
                    const int xx = std::clamp(x + dx, 0, w - 1);
                    const Col3& t = k.at(dx, dy);
                    const Col3& s = src[static_cast<std::size_t>(yy) * w + xx];
                    acc.x += t.x * s.x;
                    acc.y += t.y * s.y;
                    acc.z += t.z * s.z;
                }
            }
            dst[static_cast<std::size_t>(y) * w + x] = acc;
        }
    });
    return dst;
}

std::vector<Col3> to_ycxcz(const FloatMap& img) {
    std::vector<Col3> out(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            auto ch = [&](int c) { return std::clamp(img.at(x, y, img.channels() == 3 ? c : 0), 0.0f, 1.0f); };
            out[static_cast<std::size_t>(y) * img.width() + x] = xyz_to_ycxcz(linear_to_xyz({ch(0), ch(1), ch(2)}));
        }
    }
    return out;
}

std::vector<Col3> preprocess(const std::vector<Col3>& ycxcz, int w, int h, const Kernel& csf, Exec exec) {
    std::vector<Col3> out = convolve(ycxcz, w, h, csf, exec);
    for (Col3& p : out) {
        Col3 rgb = xyz_to_linear(ycxcz_to_xyz(p));
        rgb = {std::clamp(rgb.x, 0.0f, 1.0f), std::clamp(rgb.y, 0.0f, 1.0f), std::clamp(rgb.z, 0.0f, 1.0f)};
        p = hunt(xyz_to_lab(linear_to_xyz(rgb)));
    }
    return out;
}

float max_color_distance() {
    const Col3 green = hunt(xyz_to_lab(linear_to_xyz({0.0f, 1.0f, 0.0f})));
    const Col3 blue = hunt(xyz_to_lab(linear_to_xyz({0.0f, 0.0f, 1.0f})));
    return std::pow(hyab(green, blue), kQc);
}

std::vector<Col3> achromatic(const std::vector<Col3>& ycxcz) {
    std::vector<Col3> out(ycxcz.size());
    for (std::size_t i = 0; i < ycxcz.size(); ++i) {
        const float c = (ycxcz[i].x + 16.0f) / 116.0f;
        out[i] = {c, c, 0.0f};
    }
    return out;
}

}  // namespace

FlipResult flip(const FloatMap& pred, const FloatMap& ref, double ppd, Exec exec) {
    check_pair(pred, ref);
    if (!(ppd > 0.0) || !std::isfinite(ppd)) throw Error(ErrorCode::InvalidArgument, "ppd must be positive");
    const int w = pred.width(), h = pred.height();
    const float fppd = static_cast<float>(ppd);

    const std::vector<Col3> ref_y = to_ycxcz(ref);
    const std::vector<Col3> test_y = to_ycxcz(pred);

    const Kernel csf = csf_kernel(fppd);
    const std::vector<Col3> ref_lab = preprocess(ref_y, w, h, csf, exec);
    const std::vector<Col3> test_lab = preprocess(test_y, w, h, csf, exec);

    const Kernel edge_k = detection_kernel(fppd, false);
    const Kernel point_k = detection_kernel(fppd, true);
    const std::vector<Col3> ref_gray = achromatic(ref_y);
    const std::vector<Col3> test_gray = achromatic(test_y);
    const std::vector<Col3> edges_ref = convolve(ref_gray, w, h, edge_k, exec);
    const std::vector<Col3> edges_test = convolve(test_gray, w, h, edge_k, exec);
    const std::vector<Col3> points_ref = convolve(ref_gray, w, h, point_k, exec);
    const std::vector<Col3> points_test = convolve(test_gray, w, h, point_k, exec);

    const float cmax = max_color_distance();
    const float pccmax = kPc * cmax;
    const float norm = 1.0f / std::sqrt(2.0f);
    auto mag = [](const Col3& p) { return std::sqrt(p.x * p.x + p.y * p.y); };

    FlipResult result;
    result.error = FloatMap(w, h, 1, 0.0f);
    for_rows(h, exec, [&](int y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            float cdiff = std::pow(hyab(ref_lab[i], test_lab[i]), kQc);
            cdiff = cdiff < pccmax ? cdiff * kPt / pccmax : kPt + (cdiff - pccmax) / (cmax - pccmax) * (1.0f - kPt);
            const float edge = std::abs(mag(edges_ref[i]) - mag(edges_test[i]));
            const float point = std::abs(mag(points_ref[i]) - mag(points_test[i]));
            const float fdiff = std::pow(norm * std::max(edge, point), kQf);
            result.error.at(x, y) = std::clamp(std::pow(cdiff, 1.0f - fdiff), 0.0f, 1.0f);
        }
    });
    result.mean = sum_rows(h, Exec::serial, [&](int y) {
                      double s = 0.0;
                      for (const float v : result.error.row(y)) s += v;
                      return s;
                  }) /
                  (static_cast<double>(w) * h);
    return result;
}

MetricReport evaluate_pair(const FloatMap& pred, const FloatMap& ref, const std::string& id, double ppd) {
    check_pair(pred, ref);
    MetricReport r;
    r.id = id;
    r.rmse = rmse(pred, ref);
    r.psnr = psnr_from_rmse(r.rmse);
    r.si_rmse = si_rmse(pred, ref);
    r.mae = mae(pred, ref);
    r.ssim = ssim(pred, ref);
    r.flip = flip(pred, ref, ppd).mean;
    return r;
}

std::pair<FloatMap, FloatMap> perceptual_pair(const FloatMap& pred, const FloatMap& ref) {
    check_pair(pred, ref);
    return {resize_bilinear(pred, kPerceptualSize, kPerceptualSize), resize_bilinear(ref, kPerceptualSize, kPerceptualSize)};
}

MetricReport aggregate(const std::vector<MetricReport>& reports) {
    if (reports.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to aggregate");
    MetricReport m;
    m.id = "mean";
    m.psnr = m.rmse = m.si_rmse = m.mae = m.ssim = m.flip = 0.0;
    for (const auto& r : reports) {
        m.psnr += r.psnr;
        m.rmse += r.rmse;
        m.si_rmse += r.si_rmse;
        m.mae += r.mae;
        m.ssim += r.ssim;
        m.flip += r.flip;
    }
    const double n = static_cast<double>(reports.size());
    m.psnr /= n;
    m.rmse /= n;
    m.si_rmse /= n;
    m.mae /= n;
    m.ssim /= n;
    m.flip /= n;
    return m;
}

std::vector<MetricReport> evaluate_directories(const fs::path& pred_dir, const fs::path& ref_dir, double ppd) {
    if (!fs::is_directory(pred_dir)) throw Error(ErrorCode::Io, "not a directory: " + pred_dir.string());
    if (!fs::is_directory(ref_dir)) throw Error(ErrorCode::Io, "not a directory: " + ref_dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pfm") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw Error(ErrorCode::Io, "no .pfm files in " + pred_dir.string());
    std::vector<MetricReport> reports;
    for (const auto& p : files) {
        const fs::path r = ref_dir / p.filename();
        if (!fs::exists(r)) throw Error(ErrorCode::Io, "missing reference " + r.string());
        reports.push_back(evaluate_pair(read_pfm(p), read_pfm(r), p.stem().string(), ppd));
    }
    return reports;
}

std::string report_csv_header() { return "id,psnr,rmse,si_rmse,mae,ssim,flip"; }

std::string report_csv_row(const MetricReport& r) {
    std::ostringstream os;
    os.precision(10);
    os << r.id << ',';
    if (std::isinf(r.psnr)) os << "inf";
    else os << r.psnr;
    os << ',' << r.rmse << ',' << r.si_rmse << ',' << r.mae << ',' << r.ssim << ',' << r.flip;
    return os.str();
}

void write_report_csv(const fs::path& path, const std::vector<MetricReport>& reports) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << report_csv_header() << '\n';
    for (const auto& r : reports) out << report_csv_row(r) << '\n';
    if (!reports.empty()) out << report_csv_row(aggregate(reports)) << '\n';
    if (!out) throw Error(ErrorCode::Io, "write failed: " + path.string());
}

ConfusionInterval binomial_confusion_interval(const StudyRecord& record, double level, IntervalMethod method) {
    if (record.trials <= 0) throw Error(ErrorCode::InvalidArgument, "trials must be positive");
    if (record.successes < 0 || record.successes > record.trials) {
        throw Error(ErrorCode::InvalidArgument, "successes must lie in [0, trials]");
    }
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::InvalidArgument, "level must lie in (0,1)");
    const double n = static_cast<double>(record.trials);
    const double p = record.successes / n;
    const double z = boost::math::quantile(boost::math::normal_distribution<double>(), 0.5 + level / 2.0);
    ConfusionInterval ci;
    ci.rate = p;
    if (method == IntervalMethod::wald) {
        ci.half_width = z * std::sqrt(p * (1.0 - p) / n);
        ci.lower = p - ci.half_width;
        ci.upper = p + ci.half_width;
    } else {
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        const double center = (p + z2 / (2.0 * n)) / denom;
        const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
        ci.half_width = half;
        ci.lower = center - half;
        ci.upper = center + half;
    }
    return ci;
}

}  // namespace icomp
