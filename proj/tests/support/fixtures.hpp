#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

namespace sci::test {

// 24x20 smooth pattern and a clipped high-frequency perturbation of it.
inline std::pair<std::vector<double>, std::vector<double>> ssim_fixture_pair() {
  std::vector<double> a(24 * 20), b(24 * 20);
  for (std::size_t i = 0; i < 24; ++i)
    for (std::size_t j = 0; j < 20; ++j) {
      const double di = static_cast<double>(i), dj = static_cast<double>(j);
      a[i * 20 + j] = 0.5 + 0.4 * std::sin(0.3 * di) * std::cos(0.2 * dj);
      b[i * 20 + j] = std::clamp(a[i * 20 + j] + 0.1 * std::sin(1.7 * di + 0.9 * dj), 0.0, 1.0);
    }
  return {a, b};
}

// scikit-image: structural_similarity(a, b, gaussian_weights=True, sigma=1.5,
// use_sample_covariance=False, data_range=1) and peak_signal_noise_ratio.
inline constexpr double kFixtureSsim = 0.769250569025108;
inline constexpr double kFixturePsnr = 23.009965436615914;

}  // namespace sci::test
