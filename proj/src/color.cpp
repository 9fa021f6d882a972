#include "sci/color.hpp"

#include <algorithm>
#include <cstdint>

#include "sci/metrics.hpp"

namespace sci {

namespace {

enum Site { kR = 0, kG1 = 1, kG2 = 2, kB = 3 };

Site site_of(std::size_t i, std::size_t j) {
  return static_cast<Site>(2 * (i & 1) + (j & 1));
}

template <class Cube>
std::array<std::vector<double>, 4> split_planes(const Cube& full, std::size_t frames) {
  const std::size_t nx = full.nx(), ny = full.ny();
  const std::size_t hx = nx / 2, hy = ny / 2;
  std::array<std::vector<double>, 4> out;
  for (auto& v : out) v.resize(hx * hy * frames);
  const auto values = full.values();
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < ny; ++j)
        out[site_of(i, j)][(b * hx + i / 2) * hy + j / 2] = values[(b * nx + i) * ny + j];
  return out;
}

}  // namespace

void ChannelQuad::validate() const {
  if (!r.same_shape(g1) || !r.same_shape(g2) || !r.same_shape(b))
    fail(ErrorKind::shape_mismatch, "ChannelQuad: sub-lattices " + to_string(r.dims()) + ", " +
                                        to_string(g1.dims()) + ", " + to_string(g2.dims()) +
                                        ", " + to_string(b.dims()) + " differ");
}

ColorVideoCube constant_color(std::size_t nx, std::size_t ny, std::size_t frames,
                              const std::array<double, 3>& rgb) {
  ColorVideoCube out(nx, ny, frames);
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t c = 0; c < 3; ++c) std::ranges::fill(out.plane(c, b), rgb[c]);
  return out;
}

BayerVideo mosaic(const ColorVideoCube& x) {
  require_even(x.dims(), "mosaic");
  BayerVideo out(x.nx(), x.ny(), x.frames());
  for (std::size_t b = 0; b < x.frames(); ++b)
    for (std::size_t i = 0; i < x.nx(); ++i)
      for (std::size_t j = 0; j < x.ny(); ++j) {
        const Site s = site_of(i, j);
        const std::size_t c = s == kR ? 0 : s == kB ? 2 : 1;
        out.at(i, j, b) = x.at(i, j, c, b);
      }
  return out;
}

ChannelQuad deinterleave(const VideoCube& bayer) {
  require_even(bayer.dims(), "deinterleave");
  auto p = split_planes(bayer, bayer.frames());
  const std::size_t hx = bayer.nx() / 2, hy = bayer.ny() / 2, f = bayer.frames();
  return {VideoCube(hx, hy, f, std::move(p[kR])), VideoCube(hx, hy, f, std::move(p[kG1])),
          VideoCube(hx, hy, f, std::move(p[kG2])), VideoCube(hx, hy, f, std::move(p[kB]))};
}

BayerVideo interleave(const ChannelQuad& q) {
  q.validate();
  const std::size_t hx = q.r.nx(), hy = q.r.ny(), frames = q.r.frames();
  BayerVideo out(2 * hx, 2 * hy, frames);
  const std::array<const VideoCube*, 4> src{&q.r, &q.g1, &q.g2, &q.b};
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t i = 0; i < 2 * hx; ++i)
      for (std::size_t j = 0; j < 2 * hy; ++j)
        out.at(i, j, b) = src[site_of(i, j)]->at(i / 2, j / 2, b);
  return out;
}

std::array<MaskCube, 4> deinterleave_masks(const MaskCube& masks) {
  require_even(masks.dims(), "deinterleave_masks");
  auto p = split_planes(masks, masks.frames());
  const std::size_t hx = masks.nx() / 2, hy = masks.ny() / 2, f = masks.frames();
  return {MaskCube(hx, hy, f, std::move(p[0])), MaskCube(hx, hy, f, std::move(p[1])),
          MaskCube(hx, hy, f, std::move(p[2])), MaskCube(hx, hy, f, std::move(p[3]))};
}

std::array<Measurement, 4> deinterleave_measurement(const Measurement& y) {
  require_even(y.dims(), "deinterleave_measurement");
  auto p = split_planes(y, 1);
  const std::size_t hx = y.nx() / 2, hy = y.ny() / 2;
  return {Measurement(hx, hy, std::move(p[0])), Measurement(hx, hy, std::move(p[1])),
          Measurement(hx, hy, std::move(p[2])), Measurement(hx, hy, std::move(p[3]))};
}

const char* to_string(Demosaicer d) { return d == Demosaicer::bilinear ? "bilinear" : "malvar"; }

Demosaicer demosaicer_from_string(const std::string& name) {
  if (name == "bilinear") return Demosaicer::bilinear;
  if (name == "malvar") return Demosaicer::malvar;
  fail(ErrorKind::config, "unknown demosaicer '" + name + "' (expected bilinear or malvar)");
}

// ---- demosaicing ----------------------------------------------------------

namespace {

using Kernel = std::array<std::array<double, 5>, 5>;

constexpr Kernel transpose(const Kernel& k) {
  Kernel t{};
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) t[a][b] = k[b][a];
  return t;
}

constexpr Kernel scaled(Kernel k, double s) {
  for (auto& row : k)
    for (double& v : row) v *= s;
  return k;
}

// Bilinear, as 5x5 tables so both demosaicers share one evaluator.
constexpr Kernel kBiCross = scaled({{{0, 0, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 1, 0, 1, 0},
                                     {0, 0, 1, 0, 0}, {0, 0, 0, 0, 0}}}, 0.25);
constexpr Kernel kBiDiag = scaled({{{0, 0, 0, 0, 0}, {0, 1, 0, 1, 0}, {0, 0, 0, 0, 0},
                                    {0, 1, 0, 1, 0}, {0, 0, 0, 0, 0}}}, 0.25);
constexpr Kernel kBiRow = scaled({{{0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}, {0, 1, 0, 1, 0},
                                   {0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}}}, 0.5);
constexpr Kernel kBiCol = transpose(kBiRow);

// Malvar-He-Cutler gradient-corrected taps, rows over i and columns over j.
constexpr Kernel kMhcGreen = scaled({{{0, 0, -1, 0, 0}, {0, 0, 2, 0, 0}, {-1, 2, 4, 2, -1},
                                      {0, 0, 2, 0, 0}, {0, 0, -1, 0, 0}}}, 0.125);
constexpr Kernel kMhcRow = scaled({{{0, 0, 0.5, 0, 0}, {0, -1, 0, -1, 0}, {-1, 4, 5, 4, -1},
                                    {0, -1, 0, -1, 0}, {0, 0, 0.5, 0, 0}}}, 0.125);
constexpr Kernel kMhcCol = transpose(kMhcRow);
constexpr Kernel kMhcDiag = scaled({{{0, 0, -1.5, 0, 0}, {0, 2, 0, 2, 0}, {-1.5, 0, 6, 0, -1.5},
                                     {0, 2, 0, 2, 0}, {0, 0, -1.5, 0, 0}}}, 0.125);

struct KernelSet {
  Kernel green;  // G at R and B sites
  Kernel row;    // missing colour whose samples sit left and right
  Kernel col;    // missing colour whose samples sit above and below
  Kernel diag;   // R at B sites and B at R sites
};

constexpr KernelSet kBilinear{kBiCross, kBiRow, kBiCol, kBiDiag};
constexpr KernelSet kMalvar{kMhcGreen, kMhcRow, kMhcCol, kMhcDiag};

std::size_t reflect(std::ptrdiff_t k, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (k < 0) k = -k;
  if (k > last) k = 2 * last - k;
  return static_cast<std::size_t>(k);
}

double apply(const Kernel& kern, const ImageView& f, std::size_t i, std::size_t j) {
  double acc = 0.0;
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b) {
      const double w = kern[a][b];
      if (w == 0.0) continue;
      const auto ii = reflect(static_cast<std::ptrdiff_t>(i) + a - 2, f.nx);
      const auto jj = reflect(static_cast<std::ptrdiff_t>(j) + b - 2, f.ny);
      acc += w * f(ii, jj);
    }
  return acc;
}

void demosaic_into(const ImageView& f, const KernelSet& k, ColorVideoCube& out, std::size_t frame) {
  for (std::size_t i = 0; i < f.nx; ++i)
    for (std::size_t j = 0; j < f.ny; ++j) {
      const double own = f(i, j);
      double r, g, b;
      switch (site_of(i, j)) {
        case kR:
          r = own;
          g = apply(k.green, f, i, j);
          b = apply(k.diag, f, i, j);
          break;
        case kG1:  // R row: red left/right, blue above/below
          r = apply(k.row, f, i, j);
          g = own;
          b = apply(k.col, f, i, j);
          break;
        case kG2:  // B row
          r = apply(k.col, f, i, j);
          g = own;
          b = apply(k.row, f, i, j);
          break;
        default:
          r = apply(k.diag, f, i, j);
          g = apply(k.green, f, i, j);
          b = own;
          break;
      }
      out.at(i, j, 0, frame) = r;
      out.at(i, j, 1, frame) = g;
      out.at(i, j, 2, frame) = b;
    }
}

void check_frame(const ImageView& f, std::size_t min_side, const char* what) {
  require_even(Dims{f.nx, f.ny, 1, 1}, what);
  if (f.nx < min_side || f.ny < min_side)
    fail(ErrorKind::invalid_argument, std::string(what) + ": frame " + std::to_string(f.nx) +
                                          "x" + std::to_string(f.ny) + " is smaller than " +
                                          std::to_string(min_side) + " on a side");
}

constexpr std::size_t kMalvarMinSide = 5;

}  // namespace

ColorVideoCube demosaic_bilinear(const ImageView& frame) {
  check_frame(frame, 2, "demosaic_bilinear");
  ColorVideoCube out(frame.nx, frame.ny, 1);
  demosaic_into(frame, kBilinear, out, 0);
  return out;
}

ColorVideoCube demosaic_malvar(const ImageView& frame) {
  check_frame(frame, kMalvarMinSide, "demosaic_malvar");
  ColorVideoCube out(frame.nx, frame.ny, 1);
  demosaic_into(frame, kMalvar, out, 0);
  clip_unit(out.values());
  return out;
}

ColorVideoCube demosaic(const VideoCube& bayer, Demosaicer d) {
  const std::size_t min_side = d == Demosaicer::malvar ? kMalvarMinSide : 2;
  ColorVideoCube out(bayer.nx(), bayer.ny(), bayer.frames());
  for (std::size_t b = 0; b < bayer.frames(); ++b)
    check_frame(bayer.frame_view(b), min_side, "demosaic");
  const KernelSet& k = d == Demosaicer::malvar ? kMalvar : kBilinear;
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(bayer.frames()); ++b)
    demosaic_into(bayer.frame_view(b), k, out, b);
  if (d == Demosaicer::malvar) clip_unit(out.values());
  return out;
}

// ---- solvers --------------------------------------------------------------

const char* to_string(ColorMode m) {
  return m == ColorMode::per_iteration ? "per_iteration" : "halfres_proxy";
}

const char* to_string(SolverKind s) { return s == SolverKind::gap ? "gap" : "admm"; }

SolverKind solver_kind_from_string(const std::string& name) {
  if (name == "gap") return SolverKind::gap;
  if (name == "admm") return SolverKind::admm;
  fail(ErrorKind::config, "unknown solver '" + name + "' (expected gap or admm)");
}

namespace {

InitKind init_of(const ColorSolveConfig& cfg) {
  return cfg.solver == SolverKind::gap ? cfg.gap.init : cfg.admm.init;
}

const std::optional<VideoCube>& init_cube_of(const ColorSolveConfig& cfg) {
  return cfg.solver == SolverKind::gap ? cfg.gap.init_cube : cfg.admm.init_cube;
}

RunReport run(const PnpProblem& p, const ColorSolveConfig& cfg, VideoCube& v) {
  return cfg.solver == SolverKind::gap ? run_gap(p, cfg.gap, v) : run_admm(p, cfg.admm, v);
}

void score(ColorSolveResult& r, const std::optional<ColorVideoCube>& truth) {
  if (!truth) return;
  const MetricReport m = video_metrics(*truth, r.estimate);
  r.final_psnr = m.mean_psnr;
  r.final_ssim = m.mean_ssim;
}

void check_truth(const std::optional<ColorVideoCube>& truth, const MaskCube& masks) {
  if (truth && (truth->nx() != masks.nx() || truth->ny() != masks.ny() ||
                truth->frames() != masks.frames()))
    fail(ErrorKind::shape_mismatch, "ground truth " + to_string(truth->dims()) +
                                        " vs Bayer masks " + to_string(masks.dims()));
}

// Half-resolution RGB proxy with G = (G1 + G2) / 2.
ColorVideoCube make_proxy(const ChannelQuad& q) {
  const std::size_t hx = q.r.nx(), hy = q.r.ny(), frames = q.r.frames();
  ColorVideoCube out(hx, hy, frames);
  for (std::size_t b = 0; b < frames; ++b)
    for (std::size_t k = 0; k < hx * hy; ++k) {
      out.plane(0, b)[k] = q.r.frame(b)[k];
      out.plane(1, b)[k] = 0.5 * (q.g1.frame(b)[k] + q.g2.frame(b)[k]);
      out.plane(2, b)[k] = q.b.frame(b)[k];
    }
  return out;
}

// Writes the denoised proxy back; both green lattices take the denoised G.
void apply_proxy(ChannelQuad& q, const ColorVideoCube& proxy) {
  const std::size_t n = q.r.nx() * q.r.ny();
  for (std::size_t b = 0; b < q.r.frames(); ++b)
    for (std::size_t k = 0; k < n; ++k) {
      q.r.frame(b)[k] = proxy.plane(0, b)[k];
      q.g1.frame(b)[k] = proxy.plane(1, b)[k];
      q.g2.frame(b)[k] = proxy.plane(1, b)[k];
      q.b.frame(b)[k] = proxy.plane(2, b)[k];
    }
}

}  // namespace

ColorSolveResult joint_color_solve(const Measurement& y, const MaskCube& masks,
                                   Denoiser& denoiser, const ColorSolveConfig& cfg,
                                   const std::optional<ColorVideoCube>& ground_truth,
                                   IterationObserver observer) {
  if (!denoiser.color())
    fail(ErrorKind::invalid_argument,
         "joint color solve needs a color denoiser, got " + denoiser.describe());
  require_even(masks.dims(), "joint_color_solve");
  if (cfg.demosaicer == Demosaicer::malvar &&
      (masks.nx() < kMalvarMinSide || masks.ny() < kMalvarMinSide))
    fail(ErrorKind::invalid_argument, "joint_color_solve: Bayer frames too small for malvar");
  check_truth(ground_truth, masks);
  if (cfg.solver == SolverKind::gap) cfg.gap.validate();
  else cfg.admm.validate();

  const SensingOperator op(masks);
  ColorVideoCube latest;  // colour estimate behind the current Bayer iterate

  PnpProblem p;
  p.y = &y;
  p.op = &op;
  p.observer = std::move(observer);
  p.denoiser_name = denoiser.describe();
  if (cfg.mode == ColorMode::per_iteration) {
    p.prior = [&](const VideoCube& x, double sigma, int k) {
      latest = denoiser.denoise(demosaic(x, cfg.demosaicer), sigma, k);
      return VideoCube(mosaic(latest));
    };
  } else {
    p.prior = [&](const VideoCube& x, double sigma, int k) {
      ChannelQuad q = deinterleave(x);
      apply_proxy(q, denoiser.denoise(make_proxy(q), sigma, k));
      return VideoCube(interleave(q));
    };
  }
  if (ground_truth) {
    p.quality = [&](const VideoCube& v) {
      ColorVideoCube est = cfg.mode == ColorMode::per_iteration && latest.size() == v.size() * 3
                               ? latest
                               : demosaic(v, cfg.demosaicer);
      clip_unit(est.values());
      const MetricReport m = video_metrics(*ground_truth, est);
      return std::pair{m.mean_psnr, m.mean_ssim};
    };
  }

  VideoCube v = initial_iterate(y, op, init_of(cfg), init_cube_of(cfg));
  ColorSolveResult r;
  r.reports.push_back(run(p, cfg, v));
  r.reports.back().solver += std::string(" joint ") + to_string(cfg.mode);
  r.estimate = cfg.mode == ColorMode::per_iteration ? std::move(latest)
                                                    : demosaic(v, cfg.demosaicer);
  clip_unit(r.estimate.values());
  score(r, ground_truth);
  if (!r.reports.empty()) {
    r.reports.back().final_psnr = r.final_psnr;
    r.reports.back().final_ssim = r.final_ssim;
  }
  return r;
}

ColorSolveResult channelwise_color_solve(const Measurement& y, const MaskCube& masks,
                                         Denoiser& denoiser, const ColorSolveConfig& cfg,
                                         const std::optional<ColorVideoCube>& ground_truth) {
  if (denoiser.color())
    fail(ErrorKind::invalid_argument,
         "channel-wise solve needs a grayscale denoiser, got " + denoiser.describe());
  if (y.nx() != masks.nx() || y.ny() != masks.ny())
    fail(ErrorKind::shape_mismatch, "measurement " + to_string(y.dims()) + " vs Bayer masks " +
                                        to_string(masks.dims()));
  check_truth(ground_truth, masks);
  const auto ys = deinterleave_measurement(y);
  const auto ms = deinterleave_masks(masks);
  const std::array<const char*, 4> names{"r", "g1", "g2", "b"};

  ColorSolveResult r;
  std::array<VideoCube, 4> parts;
  for (std::size_t s = 0; s < 4; ++s) {
    const SensingOperator op(ms[s]);
    SolveResult part = cfg.solver == SolverKind::gap
                           ? gap_solve(ys[s], op, denoiser, cfg.gap)
                           : admm_solve(ys[s], op, denoiser, cfg.admm);
    part.report.solver += std::string(" channel ") + names[s];
    parts[s] = std::move(part.estimate);
    r.reports.push_back(std::move(part.report));
  }
  const BayerVideo bayer = interleave({parts[0], parts[1], parts[2], parts[3]});
  r.estimate = demosaic(bayer, cfg.demosaicer);
  clip_unit(r.estimate.values());
  score(r, ground_truth);
  return r;
}

}  // namespace sci
