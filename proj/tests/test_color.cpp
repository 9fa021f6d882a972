#include <doctest.h>

#include "sci/color.hpp"
#include "sci/forward_model.hpp"
#include "sci/maskgen.hpp"
#include "support/helpers.hpp"

using namespace sci;

namespace {

ColorVideoCube random_color(std::size_t nx, std::size_t ny, std::size_t frames, Rng& rng) {
  ColorVideoCube c(nx, ny, frames);
  for (double& v : c.values()) v = rng.uniform();
  return c;
}

VideoCube ramp(std::size_t nx, std::size_t ny) {
  VideoCube v(nx, ny, 1);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) v.at(i, j, 0) = static_cast<double>(i * ny + j);
  return v;
}

}  // namespace

TEST_CASE("mosaic samples RGGB") {
  Rng rng(61);
  const ColorVideoCube c = random_color(4, 6, 2, rng);
  const BayerVideo m = mosaic(c);
  CHECK(m.at(0, 0, 1) == c.at(0, 0, 0, 1));
  CHECK(m.at(0, 1, 1) == c.at(0, 1, 1, 1));
  CHECK(m.at(1, 0, 1) == c.at(1, 0, 1, 1));
  CHECK(m.at(1, 1, 1) == c.at(1, 1, 2, 1));
  CHECK(m.at(3, 5, 0) == c.at(3, 5, 2, 0));
  CHECK_THROWS_AS(mosaic(ColorVideoCube(3, 4, 1)), Error);
}

TEST_CASE("deinterleave and interleave are exact inverses") {
  Rng rng(62);
  const VideoCube v = test::random_video(6, 8, 3, rng);
  const ChannelQuad q = deinterleave(v);
  CHECK(q.r.dims() == Dims{3, 4, 1, 3});
  CHECK(q.g2.at(1, 2, 0) == v.at(3, 4, 0));
  CHECK(q.g1.at(1, 2, 0) == v.at(2, 5, 0));
  CHECK(static_cast<const VideoCube&>(interleave(q)) == v);

  const MaskCube m = test::random_masks(6, 8, 3, rng);
  const auto mq = deinterleave_masks(m);
  CHECK(mq[3].at(2, 3, 2) == m.at(5, 7, 2));
  const Measurement y = forward(v, SensingOperator(m));
  const auto yq = deinterleave_measurement(y);
  // The forward model commutes with sub-lattice sampling.
  const Measurement y_b = forward(q.b, SensingOperator(mq[3]));
  CHECK(test::max_abs_diff(yq[3].values(), y_b.values()) <= 1e-15);
}

TEST_CASE("both demosaicers reproduce constant colours exactly") {
  for (Demosaicer d : {Demosaicer::bilinear, Demosaicer::malvar}) {
    const ColorVideoCube c = constant_color(8, 10, 2, {0.2, 0.55, 0.9});
    const ColorVideoCube out = demosaic(mosaic(c), d);
    CHECK(test::max_abs_diff(out.values(), c.values()) <= 1e-15);
  }
}

TEST_CASE("bilinear demosaic on a 4x4 ramp by hand") {
  const VideoCube v = ramp(4, 4);  // v(i, j) = 4i + j
  const ColorVideoCube d = demosaic_bilinear(v.frame_view(0));
  auto rgb = [&](std::size_t i, std::size_t j) {
    return std::array<double, 3>{d.at(i, j, 0, 0), d.at(i, j, 1, 0), d.at(i, j, 2, 0)};
  };
  // R site (0,0): G from the mirrored cross (1,1,4,4), B from the mirrored diagonal.
  CHECK(rgb(0, 0) == std::array<double, 3>{0.0, 2.5, 5.0});
  // G1 site (0,1): R from the row (0,2), B from the column (5,5).
  CHECK(rgb(0, 1) == std::array<double, 3>{1.0, 1.0, 5.0});
  // G2 site (1,0): R from the column (0,8), B from the mirrored row (5,5).
  CHECK(rgb(1, 0) == std::array<double, 3>{4.0, 4.0, 5.0});
  // B site (1,1): R from the diagonal (0,2,8,10), G from the cross (1,9,4,6).
  CHECK(rgb(1, 1) == std::array<double, 3>{5.0, 5.0, 5.0});
  // Interior B site (3,3) mirrors row/column 4 onto 2.
  CHECK(rgb(3, 3) == std::array<double, 3>{10.0, 12.5, 15.0});
}

TEST_CASE("Malvar taps seen through an impulse") {
  // Flat 0.5 background with +0.25 on the R site (4,4).
  VideoCube v(10, 10, 1, 0.5);
  v.at(4, 4, 0) = 0.75;
  const ColorVideoCube d = demosaic_malvar(v.frame_view(0));
  auto g = [&](std::size_t i, std::size_t j) { return d.at(i, j, 1, 0); };
  auto r = [&](std::size_t i, std::size_t j) { return d.at(i, j, 0, 0); };
  auto b = [&](std::size_t i, std::size_t j) { return d.at(i, j, 2, 0); };
  CHECK(r(4, 4) == 0.75);
  CHECK(g(4, 4) == doctest::Approx(0.5 + 0.25 * 4.0 / 8.0));   // G at R, centre
  CHECK(g(4, 6) == doctest::Approx(0.5 - 0.25 * 1.0 / 8.0));   // G at R, two along the row
  CHECK(r(4, 5) == doctest::Approx(0.5 + 0.25 * 4.0 / 8.0));   // R at G in an R row, neighbour
  CHECK(r(3, 4) == doctest::Approx(0.5 + 0.25 * 4.0 / 8.0));   // R at G in a B row, column neighbour
  CHECK(r(5, 5) == doctest::Approx(0.5 + 0.25 * 2.0 / 8.0));   // R at B, diagonal
  CHECK(r(5, 7) == doctest::Approx(0.5));                       // impulse outside the 5x5 support
  CHECK(b(4, 4) == doctest::Approx(0.5 + 0.25 * 6.0 / 8.0));   // B at R, centre
  CHECK(b(4, 6) == doctest::Approx(0.5 - 0.25 * 1.5 / 8.0));   // B at R, two along the row
  CHECK(g(4, 5) == 0.5);                                        // G sites keep their sample
}

TEST_CASE("Malvar clips and needs five samples per side") {
  VideoCube v(6, 6, 1, 0.0);
  v.at(2, 2, 0) = 1.0;
  const ColorVideoCube d = demosaic_malvar(v.frame_view(0));
  CHECK(d.min_value() >= 0.0);
  CHECK(d.max_value() <= 1.0);
  CHECK_THROWS_AS(demosaic_malvar(VideoCube(4, 6, 1).frame_view(0)), Error);
}

TEST_CASE("demosaicer names") {
  CHECK(demosaicer_from_string("malvar") == Demosaicer::malvar);
  CHECK(std::string(to_string(Demosaicer::bilinear)) == "bilinear");
  CHECK_THROWS_AS(demosaicer_from_string("menon"), Error);
}

TEST_CASE("joint and channel-wise colour solves run end to end") {
  test::QuietWarnings quiet;
  SceneSpec s;
  s.kind = SceneKind::moving_square_color;
  s.nx = s.ny = 16;
  s.frames = 4;
  const ColorVideoCube truth = make_color_scene(s);
  MaskSpec ms;
  ms.nx = ms.ny = 16;
  ms.frames = 4;
  ms.seed = 3;
  const MaskCube masks = generate_masks(ms);
  const Measurement y = simulate_measurement(truth, masks, 0.0, 4);

  ColorSolveConfig cfg;
  cfg.gap.max_iters = 5;
  DenoiserBinding color;
  color.color = true;
  auto cd = make_denoiser(color);
  auto gd = make_denoiser(DenoiserBinding{});
  for (ColorMode mode : {ColorMode::per_iteration, ColorMode::halfres_proxy}) {
    cfg.mode = mode;
    const ColorSolveResult j = joint_color_solve(y, masks, *cd, cfg, truth);
    CHECK(j.estimate.same_shape(truth));
    REQUIRE(j.reports.size() == 1);
    CHECK(j.reports[0].iterations.size() == 5);
    CHECK(std::isfinite(j.final_psnr));
  }
  const ColorSolveResult c = channelwise_color_solve(y, masks, *gd, cfg, truth);
  CHECK(c.reports.size() == 4);
  CHECK(c.estimate.same_shape(truth));
  CHECK_THROWS_AS(joint_color_solve(y, masks, *gd, cfg), Error);
  CHECK_THROWS_AS(channelwise_color_solve(y, masks, *cd, cfg), Error);
}
