// Reference loops: one pass per mathematical step, no threading.

#include <cmath>
#include <vector>

#include "sci/kernels.hpp"

namespace sci::kernels {

double TvGeometry::step() const {
  double s = 0.0;
  if (nx > 1) s += wx * wx;
  if (ny > 1) s += wy * wy;
  if (depth > 1) s += wt * wt;
  return s > 0.0 ? 1.0 / (4.0 * s) : 1.0;
}

namespace serial {

void forward(std::span<const double> masks, std::span<const double> x,
             std::size_t n, std::size_t frames, std::span<double> y) {
  for (std::size_t p = 0; p < n; ++p) y[p] = 0.0;
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t p = 0; p < n; ++p) y[p] += masks[b * n + p] * x[b * n + p];
}

void adjoint(std::span<const double> masks, std::span<const double> y,
             std::size_t n, std::size_t frames, std::span<double> x) {
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t p = 0; p < n; ++p) x[b * n + p] = masks[b * n + p] * y[p];
}

void r_diagonal(std::span<const double> masks, std::size_t n,
                std::size_t frames, std::span<double> r) {
  for (std::size_t p = 0; p < n; ++p) r[p] = 0.0;
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t p = 0; p < n; ++p) r[p] += masks[b * n + p] * masks[b * n + p];
}

void project(std::span<const double> masks, std::span<const double> r,
             std::span<const double> y, std::span<const double> v,
             std::size_t n, std::size_t frames, std::span<double> x) {
  std::vector<double> hv(n);
  forward(masks, v, n, frames, hv);
  std::vector<double> corr(n);
  for (std::size_t p = 0; p < n; ++p) corr[p] = r[p] > 0.0 ? (y[p] - hv[p]) / r[p] : 0.0;
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t p = 0; p < n; ++p)
      x[b * n + p] = v[b * n + p] + masks[b * n + p] * corr[p];
}

void admm_x_update(std::span<const double> masks, std::span<const double> r,
                   std::span<const double> y, std::span<const double> q,
                   double rho, std::size_t n, std::size_t frames,
                   std::span<double> x) {
  std::vector<double> hq(n);
  forward(masks, q, n, frames, hq);
  std::vector<double> corr(n);
  for (std::size_t p = 0; p < n; ++p) corr[p] = (y[p] - hq[p]) / (rho + r[p]);
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t p = 0; p < n; ++p)
      x[b * n + p] = q[b * n + p] + masks[b * n + p] * corr[p];
}

namespace {

// Weighted divergence, the negative adjoint of the forward-difference
// gradient. The dual field is zero on the last index of each axis.
void divergence(const TvGeometry& g, const std::vector<double>& px,
                const std::vector<double>& py, const std::vector<double>& pt,
                std::vector<double>& div) {
  const std::size_t slice = g.channels * g.nx * g.ny;
  for (std::size_t t = 0; t < g.depth; ++t)
    for (std::size_t c = 0; c < g.channels; ++c)
      for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
          const std::size_t k = ((t * g.channels + c) * g.nx + i) * g.ny + j;
          const double dx = g.wx * (px[k] - (i > 0 ? px[k - g.ny] : 0.0));
          const double dy = g.wy * (py[k] - (j > 0 ? py[k - 1] : 0.0));
          const double dt = g.wt * (pt[k] - (t > 0 ? pt[k - slice] : 0.0));
          div[k] = dx + dy + dt;
        }
}

}  // namespace

void tv_chambolle(std::span<const double> f, const TvGeometry& g,
                  double weight, int iters, std::span<double> u) {
  const std::size_t total = g.size();
  const std::size_t slice = g.channels * g.nx * g.ny;
  const double tau = g.step();
  std::vector<double> px(total, 0.0), py(total, 0.0), pt(total, 0.0);
  std::vector<double> div(total), h(total);
  std::vector<double> gx(total), gy(total), gt(total);
  std::vector<double> norm(g.depth * g.nx * g.ny);

  for (int it = 0; it < iters; ++it) {
    divergence(g, px, py, pt, div);
    for (std::size_t k = 0; k < total; ++k) h[k] = div[k] - f[k] / weight;

    for (std::size_t t = 0; t < g.depth; ++t)
      for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.nx; ++i)
          for (std::size_t j = 0; j < g.ny; ++j) {
            const std::size_t k = ((t * g.channels + c) * g.nx + i) * g.ny + j;
            gx[k] = i + 1 < g.nx ? g.wx * (h[k + g.ny] - h[k]) : 0.0;
            gy[k] = j + 1 < g.ny ? g.wy * (h[k + 1] - h[k]) : 0.0;
            gt[k] = t + 1 < g.depth ? g.wt * (h[k + slice] - h[k]) : 0.0;
          }

    // Coupled norm over channels and axes at each voxel.
    for (std::size_t t = 0; t < g.depth; ++t)
      for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ny; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < g.channels; ++c) {
            const std::size_t k = ((t * g.channels + c) * g.nx + i) * g.ny + j;
            acc += gx[k] * gx[k];
            acc += gy[k] * gy[k];
            acc += gt[k] * gt[k];
          }
          norm[(t * g.nx + i) * g.ny + j] = std::sqrt(acc);
        }

    for (std::size_t t = 0; t < g.depth; ++t)
      for (std::size_t c = 0; c < g.channels; ++c)
        for (std::size_t i = 0; i < g.nx; ++i)
          for (std::size_t j = 0; j < g.ny; ++j) {
            const std::size_t k = ((t * g.channels + c) * g.nx + i) * g.ny + j;
            const double denom = 1.0 + tau * norm[(t * g.nx + i) * g.ny + j];
            px[k] = (px[k] + tau * gx[k]) / denom;
            py[k] = (py[k] + tau * gy[k]) / denom;
            pt[k] = (pt[k] + tau * gt[k]) / denom;
          }
  }

  divergence(g, px, py, pt, div);
  for (std::size_t k = 0; k < total; ++k) u[k] = f[k] - weight * div[k];
}

}  // namespace serial
}  // namespace sci::kernels
