#include "sci/solvers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "sci/metrics.hpp"

namespace sci {

const char* to_string(LambdaSchedule s) {
  return s == LambdaSchedule::monotone ? "monotone" : "adaptive";
}

const char* to_string(InitKind k) {
  switch (k) {
    case InitKind::adjoint: return "adjoint";
    case InitKind::zeros: return "zeros";
    case InitKind::provided: return "provided";
  }
  return "?";
}

void GapConfig::validate() const {
  if (!(lambda0 > 0.0)) fail(ErrorKind::config, "gap: lambda0 must be > 0");
  if (!(xi > 0.0 && xi < 1.0)) fail(ErrorKind::config, "gap: xi must lie in (0,1)");
  if (!(eta >= 0.0 && eta < 1.0)) fail(ErrorKind::config, "gap: eta must lie in [0,1)");
  if (max_iters < 1) fail(ErrorKind::config, "gap: max_iters must be >= 1");
  if (!(sigma_floor >= 0.0)) fail(ErrorKind::config, "gap: sigma_floor must be >= 0");
  if (init == InitKind::provided && !init_cube)
    fail(ErrorKind::config, "gap: init 'provided' needs an initial cube");
}

void AdmmConfig::validate() const {
  if (!(rho0 > 0.0)) fail(ErrorKind::config, "admm: rho0 must be > 0");
  if (!(gamma >= 1.0)) fail(ErrorKind::config, "admm: gamma must be >= 1");
  if (!(lambda > 0.0)) fail(ErrorKind::config, "admm: lambda must be > 0");
  if (max_iters < 1) fail(ErrorKind::config, "admm: max_iters must be >= 1");
  if (!(sigma_floor >= 0.0)) fail(ErrorKind::config, "admm: sigma_floor must be >= 0");
  if (init == InitKind::provided && !init_cube)
    fail(ErrorKind::config, "admm: init 'provided' needs an initial cube");
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double residual_delta(const VideoCube& x_prev, const VideoCube& x_next,
                      const VideoCube& v_prev, const VideoCube& v_next) {
  if (!x_prev.same_shape(x_next) || !x_prev.same_shape(v_prev) || !x_prev.same_shape(v_next))
    fail(ErrorKind::shape_mismatch, "residual_delta: all four cubes must share one shape");
  const double scale = 1.0 / std::sqrt(static_cast<double>(x_prev.size()));
  return scale * (l2_distance(x_next.values(), x_prev.values()) +
                  l2_distance(v_next.values(), v_prev.values()));
}

double lambda_schedule_step(double delta_prev, double delta_next, double lambda_k,
                            const GapConfig& cfg) {
  if (cfg.schedule == LambdaSchedule::monotone) return cfg.xi * lambda_k;
  return delta_next >= cfg.eta * delta_prev ? cfg.xi * lambda_k : lambda_k;
}

VideoCube initial_iterate(const Measurement& y, const SensingOperator& op, InitKind init,
                          const std::optional<VideoCube>& provided) {
  switch (init) {
    case InitKind::zeros:
      return VideoCube(op.nx(), op.ny(), op.frames());
    case InitKind::provided:
      if (!provided) fail(ErrorKind::config, "init 'provided' without a cube");
      if (provided->dims() != op.masks().dims())
        fail(ErrorKind::shape_mismatch, "provided initial cube " + to_string(provided->dims()) +
                                            " vs masks " + to_string(op.masks().dims()));
      return *provided;
    case InitKind::adjoint: {
      VideoCube v = adjoint(y, op);
      if (op.max_r() > 0.0)
        for (double& x : v.values()) x /= op.max_r();
      return v;
    }
  }
  fail(ErrorKind::config, "unknown init");
}

namespace {

using Clock = std::chrono::steady_clock;

double measurement_residual(const VideoCube& v, const Measurement& y, const SensingOperator& op) {
  return l2_distance(forward(v, op).values(), y.values());
}

double max_inconsistency(const VideoCube& x, const Measurement& y, const SensingOperator& op) {
  const Measurement hx = forward(x, op);
  double worst = 0.0;
  for (std::size_t p = 0; p < op.pixels(); ++p)
    if (op.r_diag()[p] > 0.0) worst = std::max(worst, std::abs(y.values()[p] - hx.values()[p]));
  return worst;
}

void require_finite(const VideoCube& v, int k, const char* what) {
  if (!v.all_finite())
    fail(ErrorKind::diverged, std::string("diverged: non-finite ") + what + " at iteration " +
                                  std::to_string(k));
}

VideoCube call_prior(const PnpProblem& p, const VideoCube& x, double sigma, int k) {
  try {
    return p.prior(x, sigma, k);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::diverged) throw;
    throw Error(e.kind(), std::string(e.what()) + " (denoiser at iteration " +
                              std::to_string(k) + ")");
  }
}

void check_problem(const PnpProblem& p) {
  if (p.y == nullptr || p.op == nullptr || !p.prior)
    fail(ErrorKind::invalid_argument, "PnP problem needs a measurement, operator and prior");
  if (p.y->nx() != p.op->nx() || p.y->ny() != p.op->ny())
    fail(ErrorKind::shape_mismatch, "measurement " + to_string(p.y->dims()) + " vs masks " +
                                        to_string(p.op->masks().dims()));
}

void fill_quality(const PnpProblem& p, const VideoCube& v, IterationRecord& rec) {
  if (!p.quality) return;
  const auto [ps, ss] = p.quality(v);
  rec.psnr = ps;
  rec.ssim = ss;
}

}  // namespace

RunReport run_gap(const PnpProblem& p, const GapConfig& cfg, VideoCube& v) {
  cfg.validate();
  check_problem(p);
  const Measurement& y = *p.y;
  const SensingOperator& op = *p.op;
  if (v.dims() != op.masks().dims())
    fail(ErrorKind::shape_mismatch, "gap: initial iterate does not match masks");

  RunReport report;
  report.solver = "gap";
  report.denoiser = p.denoiser_name;
  if (p.quality) report.init_psnr = p.quality(v).first;

  double lambda = cfg.lambda0;
  double delta_prev = std::numeric_limits<double>::quiet_NaN();
  VideoCube x = v;  // x^(0) := v^(0) for the first Delta
  for (int k = 0; k < cfg.max_iters; ++k) {
    const auto t0 = Clock::now();
    const double sigma = std::max(std::sqrt(lambda), cfg.sigma_floor);

    VideoCube x_next = project_onto_manifold(v, y, op);
    require_finite(x_next, k, "projection");
    VideoCube v_next = call_prior(p, x_next, sigma, k);
    require_finite(v_next, k, "denoiser output");

    IterationRecord rec;
    rec.k = k;
    rec.lambda_or_rho = lambda;
    rec.sigma = sigma;
    rec.delta = residual_delta(x, x_next, v, v_next);
    if (k >= 1) {
      rec.step_norm = l2_distance(x_next.values(), x.values());
      rec.gap_norm = l2_distance(v.values(), x.values());
    }
    rec.residual = measurement_residual(v_next, y, op);
    rec.consistency = max_inconsistency(x_next, y, op);
    if (p.observer) p.observer(k, x_next, v_next);
    fill_quality(p, v_next, rec);

    // The first step has no earlier Delta to compare against and always decays.
    lambda = k == 0 ? cfg.xi * lambda : lambda_schedule_step(delta_prev, rec.delta, lambda, cfg);
    delta_prev = rec.delta;
    x = std::move(x_next);
    v = std::move(v_next);
    rec.millis = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    report.iterations.push_back(rec);
    if (cfg.delta_tol > 0.0 && rec.delta < cfg.delta_tol) break;
  }
  report.next_lambda_or_rho = lambda;
  return report;
}

RunReport run_admm(const PnpProblem& p, const AdmmConfig& cfg, VideoCube& v) {
  cfg.validate();
  check_problem(p);
  const Measurement& y = *p.y;
  const SensingOperator& op = *p.op;
  if (v.dims() != op.masks().dims())
    fail(ErrorKind::shape_mismatch, "admm: initial iterate does not match masks");

  RunReport report;
  report.solver = "admm";
  report.denoiser = p.denoiser_name;
  if (p.quality) report.init_psnr = p.quality(v).first;

  double rho = cfg.rho0;
  VideoCube u(op.nx(), op.ny(), op.frames());
  VideoCube x = v;
  VideoCube q(op.nx(), op.ny(), op.frames());
  VideoCube shifted(op.nx(), op.ny(), op.frames());
  for (int k = 0; k < cfg.max_iters; ++k) {
    const auto t0 = Clock::now();
    const double sigma = std::max(std::sqrt(cfg.lambda / rho), cfg.sigma_floor);

    for (std::size_t i = 0; i < q.size(); ++i) q.values()[i] = v.values()[i] - u.values()[i] / rho;
    VideoCube x_next = admm_x_update(q, y, op, rho);
    require_finite(x_next, k, "x-update");
    for (std::size_t i = 0; i < q.size(); ++i)
      shifted.values()[i] = x_next.values()[i] + u.values()[i] / rho;
    VideoCube v_next = call_prior(p, shifted, sigma, k);
    require_finite(v_next, k, "denoiser output");
    for (std::size_t i = 0; i < u.size(); ++i)
      u.values()[i] += rho * (x_next.values()[i] - v_next.values()[i]);
    require_finite(u, k, "dual variable");

    IterationRecord rec;
    rec.k = k;
    rec.lambda_or_rho = rho;
    rec.sigma = sigma;
    rec.delta = residual_delta(x, x_next, v, v_next);
    rec.residual = measurement_residual(v_next, y, op);
    rec.consistency = max_inconsistency(x_next, y, op);
    if (p.observer) p.observer(k, x_next, v_next);
    fill_quality(p, v_next, rec);

    rho *= cfg.gamma;
    x = std::move(x_next);
    v = std::move(v_next);
    rec.millis = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    report.iterations.push_back(rec);
    if (cfg.delta_tol > 0.0 && rec.delta < cfg.delta_tol) break;
  }
  report.next_lambda_or_rho = rho;
  return report;
}

namespace {

PnpProblem gray_problem(const Measurement& y, const SensingOperator& op, Denoiser& denoiser,
                        const std::optional<VideoCube>& truth, IterationObserver observer) {
  if (denoiser.color())
    fail(ErrorKind::invalid_argument, "grayscale solve needs a grayscale denoiser, got " +
                                          denoiser.describe());
  if (truth && truth->dims() != op.masks().dims())
    fail(ErrorKind::shape_mismatch, "ground truth " + to_string(truth->dims()) + " vs masks " +
                                        to_string(op.masks().dims()));
  PnpProblem p;
  p.y = &y;
  p.op = &op;
  p.prior = [&denoiser](const VideoCube& x, double sigma, int k) {
    return denoiser.denoise(x, sigma, k);
  };
  if (truth) {
    p.quality = [&truth](const VideoCube& v) {
      VideoCube clipped = v;
      clip_unit(clipped.values());
      const MetricReport m = video_metrics(*truth, clipped);
      return std::pair{m.mean_psnr, m.mean_ssim};
    };
  }
  p.observer = std::move(observer);
  p.denoiser_name = denoiser.describe();
  return p;
}

void finalize(SolveResult& r, const std::optional<VideoCube>& truth) {
  clip_unit(r.estimate.values());
  if (truth) {
    const MetricReport m = video_metrics(*truth, r.estimate);
    r.report.final_psnr = m.mean_psnr;
    r.report.final_ssim = m.mean_ssim;
  }
}

}  // namespace

SolveResult gap_solve(const Measurement& y, const SensingOperator& op, Denoiser& denoiser,
                      const GapConfig& cfg, const std::optional<VideoCube>& ground_truth,
                      IterationObserver observer) {
  cfg.validate();
  PnpProblem p = gray_problem(y, op, denoiser, ground_truth, std::move(observer));
  SolveResult r;
  r.estimate = initial_iterate(y, op, cfg.init, cfg.init_cube);
  r.report = run_gap(p, cfg, r.estimate);
  finalize(r, ground_truth);
  return r;
}

SolveResult admm_solve(const Measurement& y, const SensingOperator& op, Denoiser& denoiser,
                       const AdmmConfig& cfg, const std::optional<VideoCube>& ground_truth,
                       IterationObserver observer) {
  cfg.validate();
  PnpProblem p = gray_problem(y, op, denoiser, ground_truth, std::move(observer));
  SolveResult r;
  r.estimate = initial_iterate(y, op, cfg.init, cfg.init_cube);
  r.report = run_admm(p, cfg, r.estimate);
  finalize(r, ground_truth);
  return r;
}

std::vector<SolveResult> warm_start_sequence(
    const std::vector<Measurement>& measurements, const SensingOperator& op, Denoiser& denoiser,
    const GapConfig& cfg, const std::optional<WarmupRun>& warmup,
    const std::vector<std::optional<VideoCube>>& ground_truth,
    WarmRestart restart) {
  cfg.validate();
  if (restart.kind == WarmRestart::Kind::fixed && !(restart.lambda > 0.0))
    fail(ErrorKind::config, "warm start: restart lambda must be > 0");
  std::vector<SolveResult> out;
  out.reserve(measurements.size());
  auto truth_for = [&](std::size_t t) -> std::optional<VideoCube> {
    return t < ground_truth.size() ? ground_truth[t] : std::nullopt;
  };

  for (std::size_t t = 0; t < measurements.size(); ++t) {
    GapConfig run_cfg = cfg;
    if (t == 0 && warmup) {
      if (warmup->denoiser == nullptr)
        fail(ErrorKind::invalid_argument, "warm start: warmup run needs a denoiser");
      SolveResult w = gap_solve(measurements[0], op, *warmup->denoiser, warmup->cfg);
      run_cfg.init = InitKind::provided;
      run_cfg.init_cube = std::move(w.estimate);
    } else if (t > 0) {
      run_cfg.init = InitKind::provided;
      run_cfg.init_cube = out.back().estimate;
      const double resumed = out.back().report.next_lambda_or_rho;
      switch (restart.kind) {
        case WarmRestart::Kind::resume: run_cfg.lambda0 = resumed; break;
        case WarmRestart::Kind::fixed: run_cfg.lambda0 = restart.lambda; break;
        case WarmRestart::Kind::residual: {
          const Measurement& y = measurements[t];
          const double mismatch = l2_distance(y.values(), forward(*run_cfg.init_cube, op).values()) /
                                  std::max(l2_norm(y.values()), std::numeric_limits<double>::min());
          // lambda is sigma^2; twice the relative mismatch stands in for sigma.
          run_cfg.lambda0 = std::clamp(4.0 * mismatch * mismatch, std::min(resumed, cfg.lambda0),
                                       cfg.lambda0);
          break;
        }
      }
    }
    try {
      out.push_back(gap_solve(measurements[t], op, denoiser, run_cfg, truth_for(t)));
    } catch (const Error& e) {
      throw Error(e.kind(), "measurement " + std::to_string(t) + ": " + e.what());
    }
  }
  return out;
}

BoundedCheck bounded_denoiser_check(Denoiser& denoiser, const VideoCube& x, double sigma,
                                    double C) {
  if (!(sigma > 0.0)) fail(ErrorKind::invalid_argument, "bounded_denoiser_check: sigma must be > 0");
  const VideoCube d = denoiser.denoise(x, sigma, 0);
  const double dist = l2_distance(d.values(), x.values());
  const double mean_sq = dist * dist / static_cast<double>(x.size());
  BoundedCheck r;
  r.ratio = mean_sq / (sigma * sigma);
  r.bounded = mean_sq <= sigma * sigma * C;
  return r;
}

}  // namespace sci
