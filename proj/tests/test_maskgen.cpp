#include <doctest.h>

#include <cmath>

#include "sci/forward_model.hpp"
#include "sci/maskgen.hpp"
#include "support/helpers.hpp"

using namespace sci;

TEST_CASE("RNG streams are reproducible and well spread") {
  Rng a(7), b(7), c(8);
  for (int k = 0; k < 100; ++k) CHECK(a.uniform() == b.uniform());
  CHECK(a.uniform() != c.uniform());
  Rng r(9);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double g = r.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(std::abs(sq / n - 1.0) < 0.02);
}

TEST_CASE("uniform takes the top 53 bits of the engine") {
  std::mt19937_64 e(123);
  Rng r(123);
  const double expect = static_cast<double>(e() >> 11) * 0x1.0p-53;
  CHECK(r.uniform() == expect);
}

TEST_CASE("Bernoulli masks are binary, seeded and hit the requested rate") {
  test::QuietWarnings quiet;
  MaskSpec s;
  s.nx = 64;
  s.ny = 48;
  s.frames = 8;
  s.seed = 5;
  s.kind = BernoulliMasks{0.3};
  const MaskCube a = generate_masks(s), b = generate_masks(s);
  CHECK(a == b);
  double ones = 0.0;
  for (double v : a.values()) {
    CHECK((v == 0.0 || v == 1.0));
    ones += v;
  }
  CHECK(ones / static_cast<double>(a.size()) == doctest::Approx(0.3).epsilon(0.05));
  s.seed = 6;
  CHECK(!(generate_masks(s) == a));
}

TEST_CASE("shifting masks are windows of one base pattern") {
  MaskSpec s;
  s.nx = 8;
  s.ny = 6;
  s.frames = 4;
  s.seed = 2;
  s.kind = ShiftingMasks{};
  const MaskCube m = generate_masks(s);
  for (std::size_t b = 1; b < 4; ++b)
    for (std::size_t i = 0; i + 1 < 8; ++i)
      for (std::size_t j = 0; j < 6; ++j) CHECK(m.at(i, j, b) == m.at(i + 1, j, b - 1));

  MaskCube base(3, 3, 1, 0.0);
  base.at(1, 2, 0) = 1.0;
  s.nx = s.ny = 2;
  s.frames = 2;
  s.kind = ShiftingMasks{base, {{{0, 0}}, {{1, 1}}}};
  const MaskCube w = generate_masks(s);
  CHECK(w.at(1, 1, 1) == 0.0);
  CHECK(w.at(0, 1, 1) == 1.0);
}

TEST_CASE("mask spec validation and never-sampled warnings") {
  MaskSpec s;
  CHECK_THROWS_AS(s.validate(), Error);
  s.nx = s.ny = 4;
  s.frames = 2;
  s.kind = BernoulliMasks{1.5};
  CHECK_THROWS_AS(generate_masks(s), Error);

  std::vector<std::string> seen;
  const WarningSink prev = set_warning_sink([&](const std::string& m) { seen.push_back(m); });
  s.kind = BernoulliMasks{1e-12};
  generate_masks(s);
  set_warning_sink(prev);
  REQUIRE(seen.size() == 1);
  CHECK(seen[0].find("16 pixel(s)") != std::string::npos);
}

TEST_CASE("simulated measurements are the forward model plus seeded noise") {
  test::QuietWarnings quiet;
  SceneSpec sc;
  sc.nx = sc.ny = 16;
  const VideoCube x = make_gray_scene(sc);
  MaskSpec ms;
  ms.nx = ms.ny = 16;
  ms.frames = 8;
  ms.seed = 1;
  const MaskCube m = generate_masks(ms);
  const Measurement clean = simulate_measurement(x, m, 0.0, 9);
  CHECK(clean == forward(x, SensingOperator(m)));
  const Measurement n1 = simulate_measurement(x, m, 0.1, 9), n2 = simulate_measurement(x, m, 0.1, 9);
  CHECK(n1 == n2);
  CHECK(!(n1 == clean));
  CHECK_THROWS_AS(simulate_measurement(x, m, -1.0, 9), Error);
}

TEST_CASE("synthetic scenes") {
  SceneSpec s;
  const VideoCube v = make_gray_scene(s);
  CHECK(v.dims() == Dims{64, 64, 1, 8});
  CHECK(v.within_unit_range());
  // Frame b is frame 0 circularly shifted by b * velocity.
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j) CHECK(v.at((i + 6) % 64, j, 3) == v.at(i, j, 0));

  s.kind = SceneKind::moving_square_color;
  const ColorVideoCube c = make_color_scene(s);
  CHECK(c.dims() == Dims{64, 64, 3, 8});
  CHECK(std::holds_alternative<ColorVideoCube>(make_synthetic_video(s)));
  CHECK_THROWS_AS(make_gray_scene(s), Error);

  s.kind = SceneKind::pan_texture;
  s.seed = 4;
  const VideoCube p = make_gray_scene(s);
  CHECK(p.min_value() >= 0.1 - 1e-12);
  CHECK(p.max_value() <= 0.9 + 1e-12);
  CHECK(p == make_gray_scene(s));
  CHECK(scene_kind_from_string("pan_texture") == SceneKind::pan_texture);
}
