#pragma once

#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <optional>
#include <string>
#include <vector>

#include "sci/denoisers.hpp"
#include "sci/forward_model.hpp"
#include "sci/tensor.hpp"

namespace sci {

enum class LambdaSchedule { monotone, adaptive };
enum class InitKind { adjoint, zeros, provided };

const char* to_string(LambdaSchedule s);
const char* to_string(InitKind k);

/// PnP-GAP parameters. sigma_k = max(sqrt(lambda_k), sigma_floor).
struct GapConfig {
  double lambda0 = 1.0;
  double xi = 0.9;
  double eta = 0.6;
  LambdaSchedule schedule = LambdaSchedule::adaptive;
  int max_iters = 60;
  double sigma_floor = 1.0 / 255.0;
  InitKind init = InitKind::adjoint;
  std::optional<VideoCube> init_cube;
  /// Optional early exit once Delta_k < delta_tol (0 disables).
  double delta_tol = 0.0;

  void validate() const;
};

/// PnP-ADMM parameters. rho_{k+1} = gamma * rho_k, sigma_k = sqrt(lambda / rho_k).
struct AdmmConfig {
  double rho0 = 0.01;
  double gamma = 1.05;
  double lambda = 0.03;
  int max_iters = 60;
  double sigma_floor = 1.0 / 255.0;
  InitKind init = InitKind::adjoint;
  std::optional<VideoCube> init_cube;
  double delta_tol = 0.0;

  void validate() const;
};

struct IterationRecord {
  int k = 0;
  /// lambda_k for GAP, rho_k for ADMM.
  double lambda_or_rho = 0.0;
  double sigma = 0.0;
  double delta = 0.0;
  /// ||y - H v^(k+1)||_2 of the denoised estimate.
  double residual = 0.0;
  /// NaN when no ground truth was supplied (or SSIM is undefined).
  double psnr = std::numeric_limits<double>::quiet_NaN();
  double ssim = std::numeric_limits<double>::quiet_NaN();
  double millis = 0.0;
  /// max |y - H x^(k+1)| over pixels with R > 0.
  double consistency = 0.0;
  /// GAP only, k >= 1: ||x^(k+1) - x^(k)||_2 and ||v^(k) - x^(k)||_2.
  /// NaN where the projection inequality is not defined.
  double step_norm = std::numeric_limits<double>::quiet_NaN();
  double gap_norm = std::numeric_limits<double>::quiet_NaN();
};

struct RunReport {
  std::string solver;
  std::string denoiser;
  std::vector<IterationRecord> iterations;
  /// Ground-truth PSNR/SSIM of the initialization, when ground truth is known.
  double init_psnr = std::numeric_limits<double>::quiet_NaN();
  double final_psnr = std::numeric_limits<double>::quiet_NaN();
  double final_ssim = std::numeric_limits<double>::quiet_NaN();
  /// Value of the schedule parameter for the next (unexecuted) iteration.
  double next_lambda_or_rho = 0.0;
};

struct SolveResult {
  VideoCube estimate;
  RunReport report;
};

/// Per-iteration hook receiving (k, x^(k+1), v^(k+1)).
using IterationObserver =
    std::function<void(int k, const VideoCube& x, const VideoCube& v)>;

/// The generic PnP step in the measurement domain: maps x^(k+1) to v^(k+1).
using PriorStep = std::function<VideoCube(const VideoCube& x, double sigma, int k)>;
/// Ground-truth quality of the current estimate, (psnr, ssim).
using QualityProbe = std::function<std::pair<double, double>(const VideoCube& v)>;

struct PnpProblem {
  const Measurement* y = nullptr;
  const SensingOperator* op = nullptr;
  PriorStep prior;
  QualityProbe quality;  // optional
  IterationObserver observer;  // optional
  std::string denoiser_name;
};

/// Initial iterate per InitKind (adjoint(y) / max(R) by default).
VideoCube initial_iterate(const Measurement& y, const SensingOperator& op,
                          InitKind init, const std::optional<VideoCube>& provided);

/// Core loops shared by the grayscale and Bayer-domain color solvers. `v`
/// holds v^(0) on entry and the final unclipped v on exit.
RunReport run_gap(const PnpProblem& problem, const GapConfig& cfg, VideoCube& v);
RunReport run_admm(const PnpProblem& problem, const AdmmConfig& cfg, VideoCube& v);

SolveResult gap_solve(const Measurement& y, const SensingOperator& op, Denoiser& denoiser,
                      const GapConfig& cfg,
                      const std::optional<VideoCube>& ground_truth = std::nullopt,
                      IterationObserver observer = {});

SolveResult admm_solve(const Measurement& y, const SensingOperator& op, Denoiser& denoiser,
                       const AdmmConfig& cfg,
                       const std::optional<VideoCube>& ground_truth = std::nullopt,
                       IterationObserver observer = {});

/// Delta = (||x_next - x_prev||_2 + ||v_next - v_prev||_2) / sqrt(n B).
double residual_delta(const VideoCube& x_prev, const VideoCube& x_next,
                      const VideoCube& v_prev, const VideoCube& v_next);

/// Monotone: xi * lambda. Adaptive: xi * lambda iff delta_next >= eta * delta_prev.
double lambda_schedule_step(double delta_prev, double delta_next, double lambda_k,
                            const GapConfig& cfg);

struct WarmupRun {
  GapConfig cfg;
  Denoiser* denoiser = nullptr;
};

/// Where the lambda schedule of measurement t > 0 starts.
///   residual: clamp((2 ||y_t - H xhat_{t-1}|| / ||y_t||)^2, lambda_{t-1}, lambda0), so an
///             unchanged scene resumes the schedule and a changed one reopens it
///   resume:   lambda_{t-1}, where t - 1 stopped
///   fixed:    `lambda`
struct WarmRestart {
  enum class Kind { residual, resume, fixed } kind = Kind::residual;
  double lambda = 0.0;
};

/// Reconstructs measurements in order. Measurement 0 starts from cfg.init (or
/// from the output of `warmup` when given); measurement t > 0 starts from the
/// reconstruction of t - 1 with lambda restarted per `restart`.
std::vector<SolveResult> warm_start_sequence(
    const std::vector<Measurement>& measurements, const SensingOperator& op,
    Denoiser& denoiser, const GapConfig& cfg, const std::optional<WarmupRun>& warmup = std::nullopt,
    const std::vector<std::optional<VideoCube>>& ground_truth = {}, WarmRestart restart = {});

struct BoundedCheck {
  bool bounded = false;
  double ratio = 0.0;
};

/// Tests (1/(nB)) ||D_sigma(x) - x||^2 <= sigma^2 C; ratio is the left side
/// divided by sigma^2.
BoundedCheck bounded_denoiser_check(Denoiser& denoiser, const VideoCube& x, double sigma,
                                    double C);

double l2_norm(std::span<const double> v);
double l2_distance(std::span<const double> a, std::span<const double> b);

}  // namespace sci
