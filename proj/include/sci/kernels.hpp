#pragma once

// Low-level loops behind the sensing operator and the TV proximal step.
//
// Every kernel exists twice: `serial` is the plain multi-pass reference kept
// for testing, `omp` is the fused OpenMP version the library dispatches to.
// Both evaluate each output sample with the same floating-point expression in
// the same order (per-pixel sums always run b = 0..B-1), so their results are
// bitwise identical for any thread count.
//
// Arrays use the tensor layout: frame-contiguous planes of n = nx*ny samples.

#include <cstddef>
#include <span>

namespace sci::kernels {

inline constexpr std::size_t kMaxTvChannels = 4;

/// Shape of a TV problem: `channels` coupled planes per slice, `depth` slices
/// along the third (temporal) axis. Sample (i, j, c, t) lives at
/// ((t * channels + c) * nx + i) * ny + j. Axis weights scale the forward
/// differences along i, j and t; a zero weight removes that axis.
struct TvGeometry {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t channels = 1;
  std::size_t depth = 1;
  double wx = 1.0;
  double wy = 1.0;
  double wt = 0.0;

  std::size_t size() const { return nx * ny * channels * depth; }
  /// Step size 1/||grad||^2 bound, 1 / (4 * sum of squared active weights).
  double step() const;
};

namespace serial {

void forward(std::span<const double> masks, std::span<const double> x,
             std::size_t n, std::size_t frames, std::span<double> y);
void adjoint(std::span<const double> masks, std::span<const double> y,
             std::size_t n, std::size_t frames, std::span<double> x);
void r_diagonal(std::span<const double> masks, std::size_t n,
                std::size_t frames, std::span<double> r);
void project(std::span<const double> masks, std::span<const double> r,
             std::span<const double> y, std::span<const double> v,
             std::size_t n, std::size_t frames, std::span<double> x);
void admm_x_update(std::span<const double> masks, std::span<const double> r,
                   std::span<const double> y, std::span<const double> q,
                   double rho, std::size_t n, std::size_t frames,
                   std::span<double> x);
void tv_chambolle(std::span<const double> f, const TvGeometry& geom,
                  double weight, int iters, std::span<double> u);

}  // namespace serial

namespace omp {

void forward(std::span<const double> masks, std::span<const double> x,
             std::size_t n, std::size_t frames, std::span<double> y);
void adjoint(std::span<const double> masks, std::span<const double> y,
             std::size_t n, std::size_t frames, std::span<double> x);
void r_diagonal(std::span<const double> masks, std::size_t n,
                std::size_t frames, std::span<double> r);
void project(std::span<const double> masks, std::span<const double> r,
             std::span<const double> y, std::span<const double> v,
             std::size_t n, std::size_t frames, std::span<double> x);
void admm_x_update(std::span<const double> masks, std::span<const double> r,
                   std::span<const double> y, std::span<const double> q,
                   double rho, std::size_t n, std::size_t frames,
                   std::span<double> x);
void tv_chambolle(std::span<const double> f, const TvGeometry& geom,
                  double weight, int iters, std::span<double> u);

}  // namespace omp

}  // namespace sci::kernels
