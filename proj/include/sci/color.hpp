#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sci/denoisers.hpp"
#include "sci/forward_model.hpp"
#include "sci/solvers.hpp"
#include "sci/tensor.hpp"

namespace sci {

/// The four RGGB sub-lattices of a Bayer video, each (nx/2, ny/2, B).
/// r sits at (even, even), g1 at (even, odd), g2 at (odd, even), b at (odd, odd).
struct ChannelQuad {
  VideoCube r, g1, g2, b;

  void validate() const;
};

ColorVideoCube constant_color(std::size_t nx, std::size_t ny, std::size_t frames,
                              const std::array<double, 3>& rgb);

BayerVideo mosaic(const ColorVideoCube& x);
ChannelQuad deinterleave(const VideoCube& bayer);
BayerVideo interleave(const ChannelQuad& q);

std::array<MaskCube, 4> deinterleave_masks(const MaskCube& masks);
std::array<Measurement, 4> deinterleave_measurement(const Measurement& y);

enum class Demosaicer { bilinear, malvar };
const char* to_string(Demosaicer d);
Demosaicer demosaicer_from_string(const std::string& name);

/// Single-frame demosaicers; the result has one frame. Both use whole-sample
/// symmetric reflection at the borders so that reflected samples keep their
/// CFA colour.
ColorVideoCube demosaic_bilinear(const ImageView& frame);
/// 5x5 gradient-corrected kernels; needs both sides >= 5. Output clipped to [0,1].
ColorVideoCube demosaic_malvar(const ImageView& frame);

/// Frame-by-frame demosaicing of a whole Bayer video.
ColorVideoCube demosaic(const VideoCube& bayer, Demosaicer d);

enum class ColorMode { per_iteration, halfres_proxy };
const char* to_string(ColorMode m);

enum class SolverKind { gap, admm };
const char* to_string(SolverKind s);
SolverKind solver_kind_from_string(const std::string& name);

struct ColorSolveConfig {
  SolverKind solver = SolverKind::gap;
  GapConfig gap;
  AdmmConfig admm;
  Demosaicer demosaicer = Demosaicer::malvar;
  ColorMode mode = ColorMode::per_iteration;
};

struct ColorSolveResult {
  ColorVideoCube estimate;
  /// One report for the joint solve; one per sub-lattice (r, g1, g2, b) for
  /// the channel-wise baseline.
  std::vector<RunReport> reports;
  double final_psnr = std::numeric_limits<double>::quiet_NaN();
  double final_ssim = std::numeric_limits<double>::quiet_NaN();
};

/// Reconstruction with demosaicing and colour denoising inside the loop.
/// `y` and `masks` live on the full Bayer grid; `denoiser` must be a colour
/// denoiser. The observer sees Bayer-domain iterates.
ColorSolveResult joint_color_solve(const Measurement& y, const MaskCube& masks,
                                   Denoiser& denoiser, const ColorSolveConfig& cfg,
                                   const std::optional<ColorVideoCube>& ground_truth = std::nullopt,
                                   IterationObserver observer = {});

/// Baseline: four independent grayscale solves on the quarter-resolution
/// sub-lattices, then interleave and demosaic once.
ColorSolveResult channelwise_color_solve(
    const Measurement& y, const MaskCube& masks, Denoiser& denoiser, const ColorSolveConfig& cfg,
    const std::optional<ColorVideoCube>& ground_truth = std::nullopt);

}  // namespace sci
