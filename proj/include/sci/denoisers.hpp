#pragma once

#include <array>
#include <memory>
#include <string>
#include <vector>

#include "sci/tensor.hpp"

namespace sci {

namespace bridge {
class Client;
}

enum class DenoiserKind { identity, clip, tv2d, tv3d, external };

const char* to_string(DenoiserKind kind);
DenoiserKind denoiser_kind_from_string(const std::string& name);

struct TvParams {
  /// TV weight = scale * sigma^2.
  double scale = 0.8;
  int iters = 5;
  /// Weights of the (row, column, time) differences for tv3d.
  std::array<double, 3> axis_weights{1.0, 1.0, 0.25};
};

/// How the solver's D_sigma is realized. A binding with `switch_at >= 0` and
/// one entry in `then` runs its own kind for iterations k < switch_at and the
/// `then` binding afterwards (hybrid schedules such as K1 iterations of one
/// denoiser followed by K2 of another).
struct DenoiserBinding {
  DenoiserKind kind = DenoiserKind::tv3d;
  TvParams tv;
  std::string endpoint;
  int timeout_ms = 60000;
  bool color = false;
  int switch_at = -1;
  std::vector<DenoiserBinding> then;

  void validate() const;
};

/// Runtime denoiser. Outputs are finite and clipped to [0,1].
class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual VideoCube denoise(const VideoCube& x, double sigma, int iteration) = 0;
  virtual ColorVideoCube denoise(const ColorVideoCube& x, double sigma,
                                 int iteration) = 0;
  /// True when the denoiser expects ColorVideoCube input.
  virtual bool color() const = 0;
  virtual std::string describe() const = 0;
};

std::unique_ptr<Denoiser> make_denoiser(const DenoiserBinding& binding);

/// One-shot convenience wrappers (external bindings open a fresh connection).
VideoCube denoise(const DenoiserBinding& binding, const VideoCube& x, double sigma);
ColorVideoCube denoise(const DenoiserBinding& binding, const ColorVideoCube& x,
                       double sigma);

/// Approximate minimizer of 1/2 ||u - f||^2 + weight * TV_iso(u) by `iters`
/// Chambolle dual-projection steps (unclipped).
std::vector<double> tv_denoise_frame(const ImageView& frame, double weight, int iters);

/// Same objective over (row, column, time) differences scaled by
/// axis_weights. With axis_weights (1,1,0) every frame is processed exactly as
/// tv_denoise_frame would.
VideoCube tv_denoise_volume(const VideoCube& cube, double weight, int iters,
                            const std::array<double, 3>& axis_weights);

/// Vectorial (channel-coupled) TV for RGB video. `temporal_weight` = 0 gives
/// frame-wise color TV.
ColorVideoCube tv_denoise_color(const ColorVideoCube& video, double weight, int iters,
                                const std::array<double, 3>& axis_weights);

/// Isotropic TV of one plane with forward differences (Neumann boundary).
double total_variation(const ImageView& frame);
/// Weighted isotropic TV over (row, column, time).
double total_variation(const VideoCube& cube, const std::array<double, 3>& axis_weights);
/// 1/2 ||u - f||^2 + weight * TV(u), the functional the TV denoisers reduce.
double tv_objective(const VideoCube& u, const VideoCube& f, double weight,
                    const std::array<double, 3>& axis_weights);

/// Out-of-process denoising through a SCID endpoint.
Array4 external_denoise(const std::string& endpoint, const Array4& x, double sigma,
                        bool color, int timeout_ms);

void clip_unit(std::span<double> values);

}  // namespace sci
