#include <doctest.h>

#include <vector>

#include "sci/kernels.hpp"
#include "support/helpers.hpp"

using namespace sci;
namespace k = sci::kernels;

TEST_CASE("serial and OpenMP kernels agree bitwise") {
  Rng rng(21);
  for (auto [nx, ny, B] : {std::tuple{1, 1, 1}, {7, 5, 3}, {32, 17, 8}, {64, 64, 24}}) {
    const std::size_t n = static_cast<std::size_t>(nx * ny), nb = n * B;
    std::vector<double> masks(nb), x(nb), y(n);
    for (double& v : masks) v = rng.uniform();
    for (double& v : x) v = rng.uniform();
    for (double& v : y) v = 3.0 * rng.uniform();

    std::vector<double> a(n), b(n);
    k::serial::forward(masks, x, n, B, a);
    k::omp::forward(masks, x, n, B, b);
    CHECK(a == b);

    std::vector<double> r1(n), r2(n);
    k::serial::r_diagonal(masks, n, B, r1);
    k::omp::r_diagonal(masks, n, B, r2);
    CHECK(r1 == r2);

    std::vector<double> u(nb), w(nb);
    k::serial::adjoint(masks, y, n, B, u);
    k::omp::adjoint(masks, y, n, B, w);
    CHECK(u == w);

    k::serial::project(masks, r1, y, x, n, B, u);
    k::omp::project(masks, r1, y, x, n, B, w);
    CHECK(u == w);

    k::serial::admm_x_update(masks, r1, y, x, 0.05, n, B, u);
    k::omp::admm_x_update(masks, r1, y, x, 0.05, n, B, w);
    CHECK(u == w);
  }
}

TEST_CASE("serial and OpenMP Chambolle TV agree bitwise") {
  Rng rng(22);
  for (std::size_t channels : {1, 3}) {
    k::TvGeometry g{.nx = 19, .ny = 23, .channels = channels, .depth = 5, .wx = 1.0, .wy = 1.0, .wt = 0.25};
    std::vector<double> f(g.size()), a(g.size()), b(g.size());
    for (double& v : f) v = rng.uniform();
    k::serial::tv_chambolle(f, g, 0.1, 7, a);
    k::omp::tv_chambolle(f, g, 0.1, 7, b);
    CHECK(a == b);
  }
}

TEST_CASE("TV step bound covers the active axes") {
  CHECK(k::TvGeometry{.nx = 4, .ny = 4, .depth = 3, .wt = 0.0}.step() == doctest::Approx(1.0 / 8.0));
  CHECK(k::TvGeometry{.nx = 4, .ny = 4, .depth = 3, .wt = 1.0}.step() == doctest::Approx(1.0 / 12.0));
  CHECK(k::TvGeometry{.nx = 4, .ny = 1, .depth = 1}.step() == doctest::Approx(1.0 / 4.0));
}
