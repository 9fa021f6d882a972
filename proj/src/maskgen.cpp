#include "sci/maskgen.hpp"

#include <cmath>
#include <numbers>

#include "sci/color.hpp"
#include "sci/forward_model.hpp"
#include "sci/log.hpp"
#include "sci/solvers.hpp"

namespace sci {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void MaskSpec::validate() const {
  if (nx == 0 || ny == 0 || frames == 0)
    fail(ErrorKind::invalid_argument, "mask spec: shape must be positive");
  if (const auto* b = std::get_if<BernoulliMasks>(&kind)) {
    if (!(b->p > 0.0 && b->p <= 1.0))
      fail(ErrorKind::invalid_argument, "mask spec: p must lie in (0,1]");
    return;
  }
  const auto& s = std::get<ShiftingMasks>(kind);
  const std::size_t bx = s.base ? s.base->nx() : nx + frames;
  const std::size_t by = s.base ? s.base->ny() : ny;
  if (s.base && s.base->frames() != 1)
    fail(ErrorKind::invalid_argument, "mask spec: shifting base must be a single frame");
  if (!s.shifts.empty() && s.shifts.size() != frames)
    fail(ErrorKind::invalid_argument, "mask spec: need one shift per frame, got " +
                                          std::to_string(s.shifts.size()));
  for (std::size_t b = 0; b < frames; ++b) {
    const auto sh = s.shifts.empty() ? std::array<std::size_t, 2>{b, 0} : s.shifts[b];
    if (sh[0] + nx > bx || sh[1] + ny > by)
      fail(ErrorKind::invalid_argument,
           "mask spec: shift (" + std::to_string(sh[0]) + "," + std::to_string(sh[1]) +
               ") of frame " + std::to_string(b) + " leaves the " + std::to_string(bx) + "x" +
               std::to_string(by) + " base mask");
  }
}

MaskCube generate_masks(const MaskSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  MaskCube out(spec.nx, spec.ny, spec.frames);
  if (const auto* b = std::get_if<BernoulliMasks>(&spec.kind)) {
    for (double& v : out.values()) v = rng.bernoulli(b->p) ? 1.0 : 0.0;
  } else {
    const auto& s = std::get<ShiftingMasks>(spec.kind);
    MaskCube base;
    if (s.base) {
      base = *s.base;
    } else {
      base = MaskCube(spec.nx + spec.frames, spec.ny, 1);
      for (double& v : base.values()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    }
    for (std::size_t b = 0; b < spec.frames; ++b) {
      const auto sh = s.shifts.empty() ? std::array<std::size_t, 2>{b, 0} : s.shifts[b];
      for (std::size_t i = 0; i < spec.nx; ++i)
        for (std::size_t j = 0; j < spec.ny; ++j) out.at(i, j, b) = base.at(i + sh[0], j + sh[1], 0);
    }
  }
  std::size_t unsampled = 0;
  for (double r : r_diagonal(out))
    if (r == 0.0) ++unsampled;
  if (unsampled > 0)
    warn(std::to_string(unsampled) + " pixel(s) are never sampled by the masks (R = 0)");
  return out;
}

namespace {

Measurement add_noise(Measurement y, double noise_sigma, std::uint64_t seed) {
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    fail(ErrorKind::invalid_argument, "simulate_measurement: noise_sigma must be finite and >= 0");
  if (noise_sigma == 0.0) return y;
  Rng rng(seed);
  for (double& v : y.values()) v += noise_sigma * rng.gaussian();
  return y;
}

}  // namespace

Measurement simulate_measurement(const VideoCube& x, const MaskCube& masks, double noise_sigma,
                                 std::uint64_t seed) {
  if (x.dims() != masks.dims())
    fail(ErrorKind::shape_mismatch, "simulate_measurement: video " + to_string(x.dims()) +
                                        " vs masks " + to_string(masks.dims()));
  return add_noise(forward(x, SensingOperator(masks)), noise_sigma, seed);
}

Measurement simulate_measurement(const ColorVideoCube& x, const MaskCube& masks,
                                 double noise_sigma, std::uint64_t seed) {
  if (x.nx() != masks.nx() || x.ny() != masks.ny() || x.frames() != masks.frames())
    fail(ErrorKind::shape_mismatch, "simulate_measurement: color video " + to_string(x.dims()) +
                                        " vs Bayer masks " + to_string(masks.dims()));
  return simulate_measurement(VideoCube(mosaic(x)), masks, noise_sigma, seed);
}

// ---- synthetic scenes -----------------------------------------------------

const char* to_string(SceneKind k) {
  switch (k) {
    case SceneKind::moving_square: return "moving_square";
    case SceneKind::moving_square_color: return "moving_square_color";
    case SceneKind::pan_texture: return "pan_texture";
  }
  return "?";
}

SceneKind scene_kind_from_string(const std::string& name) {
  for (auto k : {SceneKind::moving_square, SceneKind::moving_square_color, SceneKind::pan_texture})
    if (name == to_string(k)) return k;
  fail(ErrorKind::config, "unknown scene '" + name +
                              "' (expected moving_square, moving_square_color or pan_texture)");
}

namespace {

void check_scene(const SceneSpec& s) {
  if (s.nx < 4 || s.ny < 4 || s.frames == 0)
    fail(ErrorKind::invalid_argument, "synthetic video: need nx, ny >= 4 and at least one frame");
}

std::size_t wrap(std::ptrdiff_t v, std::size_t n) {
  const auto m = static_cast<std::ptrdiff_t>(n);
  return static_cast<std::size_t>(((v % m) + m) % m);
}

// Label map of frame 0: 0 background, 1 square, 2 inner square.
std::vector<int> square_labels(std::size_t nx, std::size_t ny) {
  const std::size_t side = std::max<std::size_t>(2, std::min(nx, ny) / 4);
  const std::size_t i0 = nx / 4, j0 = ny / 4;
  const std::size_t inner = side / 2, k0 = (side - inner) / 2;
  std::vector<int> lab(nx * ny, 0);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      const bool in = i >= k0 && i < k0 + inner && j >= k0 && j < k0 + inner;
      lab[(i0 + i) * ny + j0 + j] = in ? 2 : 1;
    }
  return lab;
}

// Circularly shifted copy of a frame-0 plane for frame b.
template <class F>
void fill_shifted(const SceneSpec& s, std::size_t b, F&& write) {
  const auto di = static_cast<std::ptrdiff_t>(b) * s.velocity[0];
  const auto dj = static_cast<std::ptrdiff_t>(b) * s.velocity[1];
  for (std::size_t i = 0; i < s.nx; ++i)
    for (std::size_t j = 0; j < s.ny; ++j)
      write(i, j, wrap(static_cast<std::ptrdiff_t>(i) - di, s.nx) * s.ny +
                      wrap(static_cast<std::ptrdiff_t>(j) - dj, s.ny));
}

std::vector<double> pan_texture_frame(const SceneSpec& s) {
  Rng rng(s.seed);
  constexpr int kWaves = 6;
  std::vector<double> img(s.nx * s.ny, 0.0);
  for (int w = 0; w < kWaves; ++w) {
    const double fi = 1.0 + std::floor(rng.uniform() * 6.0);
    const double fj = 1.0 + std::floor(rng.uniform() * 6.0);
    const double phase = 2.0 * std::numbers::pi * rng.uniform();
    const double amp = 0.5 + 0.5 * rng.uniform();
    for (std::size_t i = 0; i < s.nx; ++i)
      for (std::size_t j = 0; j < s.ny; ++j)
        img[i * s.ny + j] += amp * std::sin(2.0 * std::numbers::pi *
                                                (fi * i / static_cast<double>(s.nx) +
                                                 fj * j / static_cast<double>(s.ny)) +
                                            phase);
  }
  const auto [lo, hi] = std::minmax_element(img.begin(), img.end());
  const double a = *lo, span = *hi - *lo;
  for (double& v : img) v = span > 0.0 ? 0.1 + 0.8 * (v - a) / span : 0.5;
  return img;
}

}  // namespace

VideoCube make_gray_scene(const SceneSpec& s) {
  check_scene(s);
  VideoCube out(s.nx, s.ny, s.frames);
  std::vector<double> base;
  if (s.kind == SceneKind::pan_texture) {
    base = pan_texture_frame(s);
  } else if (s.kind == SceneKind::moving_square) {
    constexpr std::array<double, 3> kLevels{0.15, 0.85, 0.5};
    for (int l : square_labels(s.nx, s.ny)) base.push_back(kLevels[l]);
  } else {
    fail(ErrorKind::invalid_argument, "make_gray_scene: moving_square_color is a color scene");
  }
  for (std::size_t b = 0; b < s.frames; ++b)
    fill_shifted(s, b, [&](std::size_t i, std::size_t j, std::size_t src) {
      out.at(i, j, b) = base[src];
    });
  return out;
}

ColorVideoCube make_color_scene(const SceneSpec& s) {
  check_scene(s);
  if (s.kind != SceneKind::moving_square_color)
    fail(ErrorKind::invalid_argument, "make_color_scene: only moving_square_color is colored");
  constexpr std::array<std::array<double, 3>, 3> kColors{
      {{0.15, 0.2, 0.25}, {0.9, 0.75, 0.55}, {0.45, 0.4, 0.3}}};
  const std::vector<int> lab = square_labels(s.nx, s.ny);
  ColorVideoCube out(s.nx, s.ny, s.frames);
  for (std::size_t b = 0; b < s.frames; ++b)
    fill_shifted(s, b, [&](std::size_t i, std::size_t j, std::size_t src) {
      for (std::size_t c = 0; c < 3; ++c) out.at(i, j, c, b) = kColors[lab[src]][c];
    });
  return out;
}

SyntheticVideo make_synthetic_video(const SceneSpec& spec) {
  if (spec.kind == SceneKind::moving_square_color) return make_color_scene(spec);
  return make_gray_scene(spec);
}

double gram_ratio(const MaskCube& masks, const VideoCube& x) {
  const SensingOperator op(masks);
  const double nx = l2_norm(x.values());
  if (nx == 0.0) fail(ErrorKind::invalid_argument, "gram_ratio: x must be nonzero");
  return l2_norm(adjoint(forward(x, op), op).values()) / nx;
}

}  // namespace sci
