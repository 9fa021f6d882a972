#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sci/tensor.hpp"

namespace sci {

/// PSNR of identical inputs (MSE = 0); printed as "inf".
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE).
double psnr(const ImageView& ref, const ImageView& test, double peak = 1.0);

/// Mean SSIM over the valid region of an 11x11 Gaussian window (sigma 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range `peak`. Both sides must be >= 11.
double ssim(const ImageView& ref, const ImageView& test, double peak = 1.0);

inline constexpr int kSsimWindow = 11;

struct MetricReport {
  std::vector<double> psnr;
  std::vector<double> ssim;
  double mean_psnr = 0.0;
  double mean_ssim = 0.0;
  /// How color frames were scored; empty for grayscale.
  std::string color_convention;
};

inline constexpr const char* kColorMetricConvention =
    "per-RGB-channel metrics averaged per frame";

MetricReport video_metrics(const VideoCube& ref, const VideoCube& test);
MetricReport video_metrics(const ColorVideoCube& ref, const ColorVideoCube& test);

/// Mean of per-frame PSNR without computing SSIM.
double mean_psnr(const VideoCube& ref, const VideoCube& test);

}  // namespace sci
