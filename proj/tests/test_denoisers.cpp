#include <doctest.h>

#include "sci/denoisers.hpp"
#include "sci/solvers.hpp"
#include "support/helpers.hpp"

using namespace sci;

namespace {

VideoCube noisy_steps(std::uint64_t seed) {
  Rng rng(seed);
  VideoCube v(24, 20, 4);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < 24; ++i)
      for (std::size_t j = 0; j < 20; ++j)
        v.at(i, j, b) = (j + b > 10 ? 0.8 : 0.2) + 0.1 * rng.gaussian();
  return v;
}

}  // namespace

TEST_CASE("Chambolle TV lowers total variation and the objective") {
  const VideoCube f = noisy_steps(41);
  const std::array<double, 3> w{1.0, 1.0, 0.25};
  for (double weight : {0.01, 0.05, 0.2}) {
    const VideoCube u = tv_denoise_volume(f, weight, 5, w);
    CHECK(total_variation(u, w) < total_variation(f, w));
    CHECK(tv_objective(u, f, weight, w) < tv_objective(f, f, weight, w));
  }
  const std::vector<double> frame = tv_denoise_frame(f.frame_view(0), 0.05, 5);
  CHECK(total_variation({frame, 24, 20}) < total_variation(f.frame_view(0)));
}

TEST_CASE("more dual iterations keep lowering the objective") {
  const VideoCube f = noisy_steps(42);
  const std::array<double, 3> w{1.0, 1.0, 0.0};
  double prev = tv_objective(f, f, 0.05, w);
  for (int iters : {1, 5, 20, 80}) {
    const double obj = tv_objective(tv_denoise_volume(f, 0.05, iters, w), f, 0.05, w);
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }
}

TEST_CASE("a zero temporal weight reduces the volume TV to per-frame TV") {
  const VideoCube f = noisy_steps(43);
  const VideoCube u = tv_denoise_volume(f, 0.05, 5, {1.0, 1.0, 0.0});
  for (std::size_t b = 0; b < f.frames(); ++b) {
    const std::vector<double> frame = tv_denoise_frame(f.frame_view(b), 0.05, 5);
    CHECK(test::max_abs_diff(u.frame(b), frame) <= 1e-14);
  }
}

TEST_CASE("constants are fixed points of every native denoiser") {
  for (DenoiserKind kind : {DenoiserKind::identity, DenoiserKind::clip, DenoiserKind::tv2d, DenoiserKind::tv3d}) {
    DenoiserBinding b;
    b.kind = kind;
    const VideoCube c(9, 7, 3, 0.37);
    CHECK(test::max_abs_diff(denoise(b, c, 0.5).values(), c.values()) <= 1e-12);
    b.color = true;
    const ColorVideoCube cc(9, 7, 2, 0.61);
    CHECK(test::max_abs_diff(denoise(b, cc, 0.5).values(), cc.values()) <= 1e-12);
  }
}

TEST_CASE("identity and clip") {
  DenoiserBinding b;
  b.kind = DenoiserKind::identity;
  VideoCube x(2, 2, 1, std::vector<double>{-0.5, 0.25, 0.75, 1.5});
  CHECK(denoise(b, x, 0.3).values()[1] == 0.25);
  b.kind = DenoiserKind::clip;
  const VideoCube c = denoise(b, x, 0.3);
  CHECK(c.values()[0] == 0.0);
  CHECK(c.values()[3] == 1.0);
}

TEST_CASE("hybrid binding switches stage at the given iteration") {
  DenoiserBinding second;
  second.kind = DenoiserKind::clip;
  DenoiserBinding first;
  first.kind = DenoiserKind::tv3d;
  first.switch_at = 2;
  first.then = {second};
  auto d = make_denoiser(first);
  const VideoCube f = noisy_steps(44);
  const VideoCube tv = d->denoise(f, 0.3, 1);
  const VideoCube clipped = d->denoise(f, 0.3, 2);
  CHECK(test::max_abs_diff(clipped.values(), denoise(second, f, 0.3).values()) == 0.0);
  CHECK(test::max_abs_diff(tv.values(), clipped.values()) > 0.01);
  CHECK(d->describe().find("from iteration 2") != std::string::npos);
}

TEST_CASE("binding validation") {
  DenoiserBinding b;
  b.tv.iters = 0;
  CHECK_THROWS_AS(b.validate(), Error);
  b = {};
  b.switch_at = 3;
  CHECK_THROWS_AS(b.validate(), Error);
  b = {};
  b.kind = DenoiserKind::external;
  b.endpoint = "ftp:nowhere";
  CHECK_THROWS_AS(b.validate(), Error);
  CHECK(denoiser_kind_from_string("tv2d") == DenoiserKind::tv2d);
  CHECK_THROWS_AS(denoiser_kind_from_string("bm3d"), Error);
}

TEST_CASE("grey and colour bindings refuse the other input") {
  DenoiserBinding b;
  auto gray = make_denoiser(b);
  CHECK_THROWS_AS(gray->denoise(ColorVideoCube(4, 4, 1), 0.1, 0), Error);
  b.color = true;
  auto color = make_denoiser(b);
  CHECK_THROWS_AS(color->denoise(VideoCube(4, 4, 1), 0.1, 0), Error);
}

TEST_CASE("bounded denoiser check") {
  DenoiserBinding b;
  b.kind = DenoiserKind::identity;
  auto id = make_denoiser(b);
  VideoCube x = noisy_steps(45);
  clip_unit(x.values());
  const BoundedCheck r = bounded_denoiser_check(*id, x, 0.1, 0.0);
  CHECK(r.bounded);
  CHECK(r.ratio == 0.0);

  b.kind = DenoiserKind::tv3d;
  auto tv = make_denoiser(b);
  const BoundedCheck t = bounded_denoiser_check(*tv, x, 0.1, 10.0);
  CHECK(t.ratio > 0.0);
  CHECK(t.bounded == (t.ratio <= 10.0));
  CHECK_THROWS_AS(bounded_denoiser_check(*tv, x, 0.0, 1.0), Error);
}
