#include "sci/forward_model.hpp"

#include <algorithm>
#include <iostream>

#include "sci/kernels.hpp"

namespace sci {

namespace {

void require_video_shape(const VideoCube& x, const SensingOperator& op,
                         const char* what) {
  if (x.dims() != op.masks().dims())
    fail(ErrorKind::shape_mismatch, std::string(what) + ": cube " +
                                        to_string(x.dims()) + " vs masks " +
                                        to_string(op.masks().dims()));
}

void require_plane_shape(const Measurement& y, const SensingOperator& op,
                         const char* what) {
  if (y.nx() != op.nx() || y.ny() != op.ny())
    fail(ErrorKind::shape_mismatch, std::string(what) + ": measurement " +
                                        to_string(y.dims()) + " vs masks " +
                                        to_string(op.masks().dims()));
}

}  // namespace

SensingOperator::SensingOperator(MaskCube masks)
    : masks_(std::move(masks)), r_diag_(r_diagonal(masks_)) {
  zero_r_pixels_ = static_cast<std::size_t>(
      std::count(r_diag_.begin(), r_diag_.end(), 0.0));
  max_r_ = r_diag_.empty() ? 0.0 : *std::max_element(r_diag_.begin(), r_diag_.end());
}

Measurement forward(const VideoCube& x, const SensingOperator& op) {
  require_video_shape(x, op, "forward");
  Measurement y(op.nx(), op.ny());
  kernels::omp::forward(op.masks().values(), x.values(), op.pixels(),
                        op.frames(), y.values());
  return y;
}

VideoCube adjoint(const Measurement& y, const SensingOperator& op) {
  require_plane_shape(y, op, "adjoint");
  VideoCube x(op.nx(), op.ny(), op.frames());
  kernels::omp::adjoint(op.masks().values(), y.values(), op.pixels(),
                        op.frames(), x.values());
  return x;
}

std::vector<double> r_diagonal(const MaskCube& masks) {
  std::vector<double> r(masks.nx() * masks.ny());
  kernels::omp::r_diagonal(masks.values(), r.size(), masks.frames(), r);
  return r;
}

VideoCube project_onto_manifold(const VideoCube& v, const Measurement& y,
                                const SensingOperator& op) {
  require_video_shape(v, op, "project_onto_manifold");
  require_plane_shape(y, op, "project_onto_manifold");
  VideoCube x(op.nx(), op.ny(), op.frames());
  kernels::omp::project(op.masks().values(), op.r_diag(), y.values(),
                        v.values(), op.pixels(), op.frames(), x.values());
  return x;
}

VideoCube admm_x_update(const VideoCube& q, const Measurement& y,
                        const SensingOperator& op, double rho) {
  require_video_shape(q, op, "admm_x_update");
  require_plane_shape(y, op, "admm_x_update");
  if (!(rho > 0.0)) fail(ErrorKind::invalid_argument, "admm_x_update: rho must be > 0");
  VideoCube x(op.nx(), op.ny(), op.frames());
  kernels::omp::admm_x_update(op.masks().values(), op.r_diag(), y.values(),
                              q.values(), rho, op.pixels(), op.frames(),
                              x.values());
  return x;
}

VideoCube gradient_f(const VideoCube& x, const Measurement& y,
                     const SensingOperator& op) {
  require_plane_shape(y, op, "gradient_f");
  Measurement residual = forward(x, op);
  auto r = residual.values();
  auto yv = y.values();
  for (std::size_t k = 0; k < r.size(); ++k) r[k] -= yv[k];
  return adjoint(residual, op);
}

DenseMatrix dense_operator(const SensingOperator& op) {
  const std::size_t rows = op.pixels();
  const std::size_t cols = rows * op.frames();
  if (rows * cols > kDenseOperatorMaxEntries)
    fail(ErrorKind::invalid_argument,
         "dense_operator: " + std::to_string(rows) + "x" + std::to_string(cols) +
             " exceeds the " + std::to_string(kDenseOperatorMaxEntries) + "-entry guard");
  DenseMatrix h{rows, cols, std::vector<double>(rows * cols, 0.0)};
  const auto m = op.masks().values();
  for (std::size_t b = 0; b < op.frames(); ++b)
    for (std::size_t p = 0; p < rows; ++p)
      h.values[p * cols + b * rows + p] = m[b * rows + p];
  return h;
}

}  // namespace sci
