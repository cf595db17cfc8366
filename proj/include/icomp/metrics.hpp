#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "icomp/float_map.hpp"
#include "icomp/parallel.hpp"

namespace icomp {

inline constexpr double kFlipDefaultPpd = 67.0;
inline constexpr int kPerceptualSize = 256;

double rmse(const FloatMap& pred, const FloatMap& ref);
double mae(const FloatMap& pred, const FloatMap& ref);
/// 20 log10(1 / rmse); +infinity when rmse == 0.
double psnr(const FloatMap& pred, const FloatMap& ref);
double psnr_from_rmse(double rmse_value);

/// Optimal scalar alpha = <pred,ref> / <pred,pred>.
double optimal_scale(const FloatMap& pred, const FloatMap& ref);
double si_rmse(const FloatMap& pred, const FloatMap& ref);

/// Gaussian-window SSIM (11x11, sigma 1.5, K1 = 0.01, K2 = 0.03, peak 1) on
/// grayscale, averaged over windows fully inside the image.
double ssim(const FloatMap& pred, const FloatMap& ref, Exec exec = Exec::parallel);

struct FlipResult {
    FloatMap error;  // 1 channel, [0,1]
    double mean = 0.0;
};

/// LDR-FLIP on linear RGB inputs clamped to [0,1]. Symmetric in its arguments.
FlipResult flip(const FloatMap& pred, const FloatMap& ref, double ppd = kFlipDefaultPpd, Exec exec = Exec::parallel);

struct MetricReport {
    std::string id;
    double psnr = std::numeric_limits<double>::infinity();
    double rmse = 0.0;
    double si_rmse = 0.0;
    double mae = 0.0;
    double ssim = 1.0;
    double flip = 0.0;
};

MetricReport evaluate_pair(const FloatMap& pred, const FloatMap& ref, const std::string& id = {},
                           double ppd = kFlipDefaultPpd);

/// Both images resized to 256x256 for perceptual (learned) metrics.
std::pair<FloatMap, FloatMap> perceptual_pair(const FloatMap& pred, const FloatMap& ref);

/// Per-metric mean across reports (id = "mean").
MetricReport aggregate(const std::vector<MetricReport>& reports);

/// Evaluates every *.pfm in pred_dir against the same filename in ref_dir.
std::vector<MetricReport> evaluate_directories(const std::filesystem::path& pred_dir,
                                               const std::filesystem::path& ref_dir,
                                               double ppd = kFlipDefaultPpd);

std::string report_csv_header();
std::string report_csv_row(const MetricReport& report);
void write_report_csv(const std::filesystem::path& path, const std::vector<MetricReport>& reports);

// --- two-alternative forced-choice statistics ---

struct StudyRecord {
    long trials = 0;
    long successes = 0;
};

enum class IntervalMethod { wald, wilson };

struct ConfusionInterval {
    double rate = 0.0;        // p-hat
    double half_width = 0.0;  // symmetric half-width (Wald) or half the Wilson width
    double lower = 0.0;
    double upper = 0.0;
};

ConfusionInterval binomial_confusion_interval(const StudyRecord& record, double level = 0.95,
                                              IntervalMethod method = IntervalMethod::wald);

}  // namespace icomp
