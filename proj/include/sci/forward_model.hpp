#pragma once

#include <cstddef>
#include <vector>

#include "sci/tensor.hpp"

namespace sci {

/// The SCI sensing operator H = [D_1, ..., D_B] with D_b = diag(C_b), plus the
/// cached diagonal of R = H H^T (R_j = sum_b C_b(j)^2).
class SensingOperator {
 public:
  SensingOperator() = default;
  explicit SensingOperator(MaskCube masks);

  const MaskCube& masks() const { return masks_; }
  const std::vector<double>& r_diag() const { return r_diag_; }

  std::size_t nx() const { return masks_.nx(); }
  std::size_t ny() const { return masks_.ny(); }
  std::size_t frames() const { return masks_.frames(); }
  std::size_t pixels() const { return masks_.nx() * masks_.ny(); }

  /// Pixels masked out in every frame. The projection leaves such pixels
  /// untouched and data consistency is not defined there.
  std::size_t zero_r_pixels() const { return zero_r_pixels_; }
  double max_r() const { return max_r_; }

 private:
  MaskCube masks_;
  std::vector<double> r_diag_;
  std::size_t zero_r_pixels_ = 0;
  double max_r_ = 0.0;
};

/// Y = sum_b C_b .* X_b
Measurement forward(const VideoCube& x, const SensingOperator& op);

/// Frame b of the result is C_b .* Y.
VideoCube adjoint(const Measurement& y, const SensingOperator& op);

/// R_j = sum_b C_b(j)^2, one entry per pixel in row-major order.
std::vector<double> r_diagonal(const MaskCube& masks);

/// Euclidean projection of v onto {x : y = Hx}: x = v + H^T R^{-1} (y - Hv).
/// Pixels with R_j = 0 are returned unchanged.
VideoCube project_onto_manifold(const VideoCube& v, const Measurement& y,
                                const SensingOperator& op);

/// Closed-form minimizer of 1/2 ||y - Hx||^2 + rho/2 ||x - q||^2:
/// x = q + H^T ((y - Hq) ./ (rho + R)).
VideoCube admm_x_update(const VideoCube& q, const Measurement& y,
                        const SensingOperator& op, double rho);

/// Gradient of f(x) = 1/2 ||y - Hx||^2, i.e. H^T (Hx - y).
VideoCube gradient_f(const VideoCube& x, const Measurement& y,
                     const SensingOperator& op);

/// Explicit (nx*ny) x (nx*ny*B) matrix of H, row-major. Row k is pixel k of the
/// measurement plane; column l is sample l of the video in tensor layout.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

inline constexpr std::size_t kDenseOperatorMaxEntries = 1'000'000;

DenseMatrix dense_operator(const SensingOperator& op);

}  // namespace sci
