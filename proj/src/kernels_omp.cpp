// OpenMP kernels. Operator loops are fused per pixel tile and TV loops per voxel,
// parallelized over independent outputs only; there are no cross-thread
// reductions, so results match the serial reference bit for bit.

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sci/kernels.hpp"

namespace sci::kernels::omp {

namespace {

using Index = std::int64_t;

// Pixels per tile. Inside a tile the frame loop is outermost so every pass
// reads contiguous memory; each pixel still accumulates over b = 0..B-1.
constexpr std::size_t kTile = 512;

Index tile_count(std::size_t n) { return static_cast<Index>((n + kTile - 1) / kTile); }

// acc[p - p0] = sum_b a[b n + p] * c[b n + p] for p in [p0, p1).
void tile_dot(std::span<const double> a, std::span<const double> c, std::size_t n,
              std::size_t frames, std::size_t p0, std::size_t p1, double* acc) {
  std::fill(acc, acc + (p1 - p0), 0.0);
  for (std::size_t b = 0; b < frames; ++b) {
    const double* ab = a.data() + b * n;
    const double* cb = c.data() + b * n;
    for (std::size_t p = p0; p < p1; ++p) acc[p - p0] += ab[p] * cb[p];
  }
}

// x[b n + p] = v[b n + p] + masks[b n + p] * corr[p - p0].
void tile_update(std::span<const double> masks, std::span<const double> v, std::size_t n,
                 std::size_t frames, std::size_t p0, std::size_t p1, const double* corr,
                 std::span<double> x) {
  for (std::size_t b = 0; b < frames; ++b) {
    const double* mb = masks.data() + b * n;
    const double* vb = v.data() + b * n;
    double* xb = x.data() + b * n;
    for (std::size_t p = p0; p < p1; ++p) xb[p] = vb[p] + mb[p] * corr[p - p0];
  }
}

}  // namespace

void forward(std::span<const double> masks, std::span<const double> x,
             std::size_t n, std::size_t frames, std::span<double> y) {
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < tile_count(n); ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile, p1 = std::min(n, p0 + kTile);
    tile_dot(masks, x, n, frames, p0, p1, y.data() + p0);
  }
}

void adjoint(std::span<const double> masks, std::span<const double> y,
             std::size_t n, std::size_t frames, std::span<double> x) {
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < tile_count(n); ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile, p1 = std::min(n, p0 + kTile);
    for (std::size_t b = 0; b < frames; ++b)
      for (std::size_t p = p0; p < p1; ++p) x[b * n + p] = masks[b * n + p] * y[p];
  }
}

void r_diagonal(std::span<const double> masks, std::size_t n,
                std::size_t frames, std::span<double> r) {
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < tile_count(n); ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile, p1 = std::min(n, p0 + kTile);
    tile_dot(masks, masks, n, frames, p0, p1, r.data() + p0);
  }
}

void project(std::span<const double> masks, std::span<const double> r,
             std::span<const double> y, std::span<const double> v,
             std::size_t n, std::size_t frames, std::span<double> x) {
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < tile_count(n); ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile, p1 = std::min(n, p0 + kTile);
    double corr[kTile];
    tile_dot(masks, v, n, frames, p0, p1, corr);
    for (std::size_t p = p0; p < p1; ++p)
      corr[p - p0] = r[p] > 0.0 ? (y[p] - corr[p - p0]) / r[p] : 0.0;
    tile_update(masks, v, n, frames, p0, p1, corr, x);
  }
}

void admm_x_update(std::span<const double> masks, std::span<const double> r,
                   std::span<const double> y, std::span<const double> q,
                   double rho, std::size_t n, std::size_t frames,
                   std::span<double> x) {
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < tile_count(n); ++t) {
    const std::size_t p0 = static_cast<std::size_t>(t) * kTile, p1 = std::min(n, p0 + kTile);
    double corr[kTile];
    tile_dot(masks, q, n, frames, p0, p1, corr);
    for (std::size_t p = p0; p < p1; ++p) corr[p - p0] = (y[p] - corr[p - p0]) / (rho + r[p]);
    tile_update(masks, q, n, frames, p0, p1, corr, x);
  }
}

namespace {

inline double divergence_at(const TvGeometry& g, const double* px,
                            const double* py, const double* pt, std::size_t k,
                            std::size_t i, std::size_t j, std::size_t t,
                            std::size_t slice) {
  const double dx = g.wx * (px[k] - (i > 0 ? px[k - g.ny] : 0.0));
  const double dy = g.wy * (py[k] - (j > 0 ? py[k - 1] : 0.0));
  const double dt = g.wt * (pt[k] - (t > 0 ? pt[k - slice] : 0.0));
  return dx + dy + dt;
}

void fill_divergence_term(const TvGeometry& g, std::span<const double> f,
                          double weight, bool subtract_data,
                          const std::vector<double>& px,
                          const std::vector<double>& py,
                          const std::vector<double>& pt,
                          std::vector<double>& out) {
  const std::size_t slice = g.channels * g.nx * g.ny;
  const Index rows = static_cast<Index>(g.depth * g.channels * g.nx);
#pragma omp parallel for schedule(static)
  for (Index r = 0; r < rows; ++r) {
    const std::size_t i = static_cast<std::size_t>(r) % g.nx;
    const std::size_t t = static_cast<std::size_t>(r) / (g.nx * g.channels);
    for (std::size_t j = 0; j < g.ny; ++j) {
      const std::size_t k = static_cast<std::size_t>(r) * g.ny + j;
      const double div = divergence_at(g, px.data(), py.data(), pt.data(), k, i, j, t, slice);
      out[k] = subtract_data ? div - f[k] / weight : f[k] - weight * div;
    }
  }
}

}  // namespace

void tv_chambolle(std::span<const double> f, const TvGeometry& g,
                  double weight, int iters, std::span<double> u) {
  const std::size_t total = g.size();
  const std::size_t slice = g.channels * g.nx * g.ny;
  const std::size_t n = g.nx * g.ny;
  const double tau = g.step();
  if (g.channels > kMaxTvChannels)
    throw std::invalid_argument("tv_chambolle: too many coupled channels");
  std::vector<double> px(total, 0.0), py(total, 0.0), pt(total, 0.0);
  std::vector<double> h(total);

  for (int it = 0; it < iters; ++it) {
    fill_divergence_term(g, f, weight, true, px, py, pt, h);

    const Index rows = static_cast<Index>(g.depth * g.nx);
#pragma omp parallel for schedule(static)
    for (Index r = 0; r < rows; ++r) {
      const std::size_t t = static_cast<std::size_t>(r) / g.nx;
      const std::size_t i = static_cast<std::size_t>(r) % g.nx;
      double ax[kMaxTvChannels], ay[kMaxTvChannels], at[kMaxTvChannels];
      for (std::size_t j = 0; j < g.ny; ++j) {
        double acc = 0.0;
        for (std::size_t c = 0; c < g.channels; ++c) {
          const std::size_t k = t * slice + c * n + i * g.ny + j;
          ax[c] = i + 1 < g.nx ? g.wx * (h[k + g.ny] - h[k]) : 0.0;
          ay[c] = j + 1 < g.ny ? g.wy * (h[k + 1] - h[k]) : 0.0;
          at[c] = t + 1 < g.depth ? g.wt * (h[k + slice] - h[k]) : 0.0;
          acc += ax[c] * ax[c];
          acc += ay[c] * ay[c];
          acc += at[c] * at[c];
        }
        const double denom = 1.0 + tau * std::sqrt(acc);
        for (std::size_t c = 0; c < g.channels; ++c) {
          const std::size_t k = t * slice + c * n + i * g.ny + j;
          px[k] = (px[k] + tau * ax[c]) / denom;
          py[k] = (py[k] + tau * ay[c]) / denom;
          pt[k] = (pt[k] + tau * at[c]) / denom;
        }
      }
    }
  }

  std::vector<double> out(total);
  fill_divergence_term(g, f, weight, false, px, py, pt, out);
  std::copy(out.begin(), out.end(), u.begin());
}

}  // namespace sci::kernels::omp
