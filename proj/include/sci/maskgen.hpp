#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "sci/tensor.hpp"

namespace sci {

/// Seeded generator with platform-stable derived distributions: uniforms take
/// the top 53 bits of one mt19937_64 draw, Gaussians use Box-Muller with one
/// output per pair of uniforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1).
  double uniform();
  bool bernoulli(double p) { return uniform() < p; }
  double gaussian();

 private:
  std::mt19937_64 engine_;
};

struct BernoulliMasks {
  double p = 0.5;
};

/// Frame b is the (nx, ny) window of `base` whose top-left corner is shifts[b].
/// An empty base means a Bernoulli(0.5) base of (nx + B, ny) drawn from the
/// spec seed; empty shifts mean (b, 0), one pixel down per frame.
struct ShiftingMasks {
  std::optional<MaskCube> base;
  std::vector<std::array<std::size_t, 2>> shifts;
};

struct MaskSpec {
  std::variant<BernoulliMasks, ShiftingMasks> kind = BernoulliMasks{};
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::size_t frames = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Warns when some pixel is never sampled (R = 0 there).
MaskCube generate_masks(const MaskSpec& spec);

/// forward(x) plus i.i.d. N(0, noise_sigma^2). Colour input is mosaicked first
/// and `masks` then lives on the Bayer grid. noise_sigma = 0 adds nothing.
Measurement simulate_measurement(const VideoCube& x, const MaskCube& masks, double noise_sigma,
                                 std::uint64_t seed);
Measurement simulate_measurement(const ColorVideoCube& x, const MaskCube& masks,
                                 double noise_sigma, std::uint64_t seed);

enum class SceneKind { moving_square, moving_square_color, pan_texture };
const char* to_string(SceneKind k);
SceneKind scene_kind_from_string(const std::string& name);

struct SceneSpec {
  SceneKind kind = SceneKind::moving_square;
  std::size_t nx = 64;
  std::size_t ny = 64;
  std::size_t frames = 8;
  /// Pixels per frame along (i, j); frame b is frame 0 circularly shifted by b * velocity.
  std::array<int, 2> velocity{2, 0};
  std::uint64_t seed = 0;
};

using SyntheticVideo = std::variant<VideoCube, ColorVideoCube>;

SyntheticVideo make_synthetic_video(const SceneSpec& spec);
VideoCube make_gray_scene(const SceneSpec& spec);
ColorVideoCube make_color_scene(const SceneSpec& spec);

/// ||H^T H x||_2 / ||x||_2 for the operator built from `masks`.
double gram_ratio(const MaskCube& masks, const VideoCube& x);

}  // namespace sci
