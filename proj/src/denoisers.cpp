#include "sci/denoisers.hpp"

#include <algorithm>
#include <cmath>

#include "sci/bridge.hpp"
#include "sci/kernels.hpp"

namespace sci {

const char* to_string(DenoiserKind kind) {
  switch (kind) {
    case DenoiserKind::identity: return "identity";
    case DenoiserKind::clip: return "clip";
    case DenoiserKind::tv2d: return "tv2d";
    case DenoiserKind::tv3d: return "tv3d";
    case DenoiserKind::external: return "external";
  }
  return "?";
}

DenoiserKind denoiser_kind_from_string(const std::string& name) {
  for (auto k : {DenoiserKind::identity, DenoiserKind::clip, DenoiserKind::tv2d,
                 DenoiserKind::tv3d, DenoiserKind::external})
    if (name == to_string(k)) return k;
  fail(ErrorKind::config, "unknown denoiser '" + name +
                              "' (expected identity, clip, tv2d, tv3d or external)");
}

void DenoiserBinding::validate() const {
  if (tv.iters < 1) fail(ErrorKind::config, "denoiser: tv iterations must be >= 1");
  if (!(tv.scale >= 0.0) || !std::isfinite(tv.scale))
    fail(ErrorKind::config, "denoiser: tv scale must be finite and >= 0");
  for (double w : tv.axis_weights)
    if (!(w >= 0.0) || !std::isfinite(w))
      fail(ErrorKind::config, "denoiser: axis weights must be finite and >= 0");
  if (kind == DenoiserKind::external) {
    bridge::Endpoint::parse(endpoint);
    if (timeout_ms <= 0) fail(ErrorKind::config, "denoiser: timeout_ms must be > 0");
  }
  if (switch_at >= 0) {
    if (then.size() != 1)
      fail(ErrorKind::config, "denoiser: switch_at needs exactly one 'then' binding");
    if (then.front().color != color)
      fail(ErrorKind::config, "denoiser: hybrid stages must agree on the color flag");
    then.front().validate();
  } else if (!then.empty()) {
    fail(ErrorKind::config, "denoiser: 'then' binding given without switch_at");
  }
}

void clip_unit(std::span<double> values) {
  for (double& v : values) v = std::clamp(v, 0.0, 1.0);
}

// ---- TV -------------------------------------------------------------------

std::vector<double> tv_denoise_frame(const ImageView& frame, double weight, int iters) {
  if (!(weight > 0.0)) fail(ErrorKind::invalid_argument, "tv_denoise_frame: weight must be > 0");
  if (iters < 1) fail(ErrorKind::invalid_argument, "tv_denoise_frame: iters must be >= 1");
  kernels::TvGeometry g{frame.nx, frame.ny, 1, 1, 1.0, 1.0, 0.0};
  std::vector<double> out(frame.values.size());
  kernels::omp::tv_chambolle(frame.values, g, weight, iters, out);
  return out;
}

VideoCube tv_denoise_volume(const VideoCube& cube, double weight, int iters,
                            const std::array<double, 3>& axis_weights) {
  if (!(weight > 0.0)) fail(ErrorKind::invalid_argument, "tv_denoise_volume: weight must be > 0");
  if (iters < 1) fail(ErrorKind::invalid_argument, "tv_denoise_volume: iters must be >= 1");
  kernels::TvGeometry g{cube.nx(), cube.ny(), 1, cube.frames(),
                        axis_weights[0], axis_weights[1], axis_weights[2]};
  VideoCube out(cube.nx(), cube.ny(), cube.frames());
  kernels::omp::tv_chambolle(cube.values(), g, weight, iters, out.values());
  return out;
}

ColorVideoCube tv_denoise_color(const ColorVideoCube& video, double weight, int iters,
                                const std::array<double, 3>& axis_weights) {
  if (!(weight > 0.0)) fail(ErrorKind::invalid_argument, "tv_denoise_color: weight must be > 0");
  if (iters < 1) fail(ErrorKind::invalid_argument, "tv_denoise_color: iters must be >= 1");
  kernels::TvGeometry g{video.nx(), video.ny(), 3, video.frames(),
                        axis_weights[0], axis_weights[1], axis_weights[2]};
  ColorVideoCube out(video.nx(), video.ny(), video.frames());
  kernels::omp::tv_chambolle(video.values(), g, weight, iters, out.values());
  return out;
}

double total_variation(const ImageView& f) {
  double tv = 0.0;
  for (std::size_t i = 0; i < f.nx; ++i)
    for (std::size_t j = 0; j < f.ny; ++j) {
      const double dx = i + 1 < f.nx ? f(i + 1, j) - f(i, j) : 0.0;
      const double dy = j + 1 < f.ny ? f(i, j + 1) - f(i, j) : 0.0;
      tv += std::sqrt(dx * dx + dy * dy);
    }
  return tv;
}

double total_variation(const VideoCube& u, const std::array<double, 3>& w) {
  double tv = 0.0;
  for (std::size_t b = 0; b < u.frames(); ++b)
    for (std::size_t i = 0; i < u.nx(); ++i)
      for (std::size_t j = 0; j < u.ny(); ++j) {
        const double v = u.at(i, j, b);
        const double dx = i + 1 < u.nx() ? w[0] * (u.at(i + 1, j, b) - v) : 0.0;
        const double dy = j + 1 < u.ny() ? w[1] * (u.at(i, j + 1, b) - v) : 0.0;
        const double dt = b + 1 < u.frames() ? w[2] * (u.at(i, j, b + 1) - v) : 0.0;
        tv += std::sqrt(dx * dx + dy * dy + dt * dt);
      }
  return tv;
}

double tv_objective(const VideoCube& u, const VideoCube& f, double weight,
                    const std::array<double, 3>& w) {
  if (!u.same_shape(f)) fail(ErrorKind::shape_mismatch, "tv_objective: shapes differ");
  double fidelity = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double d = u.values()[k] - f.values()[k];
    fidelity += d * d;
  }
  return 0.5 * fidelity + weight * total_variation(u, w);
}

Array4 external_denoise(const std::string& endpoint, const Array4& x, double sigma,
                        bool color, int timeout_ms) {
  bridge::Client client(endpoint, timeout_ms);
  return client.denoise(x, color, sigma);
}

// ---- runtime denoisers ----------------------------------------------------

namespace {

class NativeDenoiser final : public Denoiser {
 public:
  explicit NativeDenoiser(const DenoiserBinding& b) : binding_(b) {}

  VideoCube denoise(const VideoCube& x, double sigma, int) override {
    require_gray();
    VideoCube out = x;
    const double weight = tv_weight(sigma);
    if (weight > 0.0) {
      std::array<double, 3> w = binding_.tv.axis_weights;
      if (binding_.kind == DenoiserKind::tv2d) w[2] = 0.0;
      out = tv_denoise_volume(x, weight, binding_.tv.iters, w);
    }
    clip_unit(out.values());
    return out;
  }

  ColorVideoCube denoise(const ColorVideoCube& x, double sigma, int) override {
    if (!binding_.color)
      fail(ErrorKind::invalid_argument,
           std::string("denoiser ") + to_string(binding_.kind) + " is bound for grayscale input");
    ColorVideoCube out = x;
    const double weight = tv_weight(sigma);
    if (weight > 0.0) {
      std::array<double, 3> w = binding_.tv.axis_weights;
      if (binding_.kind == DenoiserKind::tv2d) w[2] = 0.0;
      out = tv_denoise_color(x, weight, binding_.tv.iters, w);
    }
    clip_unit(out.values());
    return out;
  }

  bool color() const override { return binding_.color; }
  std::string describe() const override {
    return std::string(to_string(binding_.kind)) + (binding_.color ? " (color)" : "");
  }

 private:
  double tv_weight(double sigma) const {
    if (sigma < 0.0) fail(ErrorKind::invalid_argument, "denoise: sigma must be >= 0");
    if (binding_.kind != DenoiserKind::tv2d && binding_.kind != DenoiserKind::tv3d) return 0.0;
    return binding_.tv.scale * sigma * sigma;
  }

  void require_gray() const {
    if (binding_.color)
      fail(ErrorKind::invalid_argument,
           std::string("denoiser ") + to_string(binding_.kind) + " is bound for color input");
  }

  DenoiserBinding binding_;
};

class ExternalDenoiser final : public Denoiser {
 public:
  explicit ExternalDenoiser(const DenoiserBinding& b)
      : color_(b.color), client_(std::make_unique<bridge::Client>(b.endpoint, b.timeout_ms)) {}

  VideoCube denoise(const VideoCube& x, double sigma, int) override {
    if (color_) fail(ErrorKind::invalid_argument, "external denoiser is bound for color input");
    Array4 out = client_->denoise(x, false, sigma);
    VideoCube v(x.nx(), x.ny(), x.frames(), std::vector<double>(out.values().begin(), out.values().end()));
    clip_unit(v.values());
    return v;
  }

  ColorVideoCube denoise(const ColorVideoCube& x, double sigma, int) override {
    if (!color_) fail(ErrorKind::invalid_argument, "external denoiser is bound for grayscale input");
    Array4 out = client_->denoise(x, true, sigma);
    ColorVideoCube v(x.nx(), x.ny(), x.frames(),
                     std::vector<double>(out.values().begin(), out.values().end()));
    clip_unit(v.values());
    return v;
  }

  bool color() const override { return color_; }
  std::string describe() const override { return "external " + client_->endpoint(); }

 private:
  bool color_;
  std::unique_ptr<bridge::Client> client_;
};

class HybridDenoiser final : public Denoiser {
 public:
  HybridDenoiser(std::unique_ptr<Denoiser> first, std::unique_ptr<Denoiser> second, int switch_at)
      : first_(std::move(first)), second_(std::move(second)), switch_at_(switch_at) {}

  VideoCube denoise(const VideoCube& x, double sigma, int k) override {
    return stage(k).denoise(x, sigma, k);
  }
  ColorVideoCube denoise(const ColorVideoCube& x, double sigma, int k) override {
    return stage(k).denoise(x, sigma, k);
  }
  bool color() const override { return first_->color(); }
  std::string describe() const override {
    return first_->describe() + " then " + second_->describe() + " from iteration " +
           std::to_string(switch_at_);
  }

 private:
  Denoiser& stage(int k) { return k < switch_at_ ? *first_ : *second_; }

  std::unique_ptr<Denoiser> first_;
  std::unique_ptr<Denoiser> second_;
  int switch_at_;
};

std::unique_ptr<Denoiser> make_single(const DenoiserBinding& b) {
  if (b.kind == DenoiserKind::external) return std::make_unique<ExternalDenoiser>(b);
  return std::make_unique<NativeDenoiser>(b);
}

}  // namespace

std::unique_ptr<Denoiser> make_denoiser(const DenoiserBinding& binding) {
  binding.validate();
  if (binding.switch_at >= 0)
    return std::make_unique<HybridDenoiser>(make_single(binding),
                                            make_denoiser(binding.then.front()),
                                            binding.switch_at);
  return make_single(binding);
}

VideoCube denoise(const DenoiserBinding& binding, const VideoCube& x, double sigma) {
  return make_denoiser(binding)->denoise(x, sigma, 0);
}

ColorVideoCube denoise(const DenoiserBinding& binding, const ColorVideoCube& x, double sigma) {
  return make_denoiser(binding)->denoise(x, sigma, 0);
}

}  // namespace sci
