#include <doctest.h>

#include <Eigen/Dense>

#include "sci/forward_model.hpp"
#include "support/helpers.hpp"

using namespace sci;
using sci::test::max_abs_diff;

namespace {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Built straight from the mask values, independent of dense_operator().
Mat oracle_matrix(const MaskCube& m) {
  const std::size_t n = m.nx() * m.ny();
  Mat H = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n * m.frames()));
  for (std::size_t b = 0; b < m.frames(); ++b)
    for (std::size_t p = 0; p < n; ++p)
      H(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(b * n + p)) = m.frame(b)[p];
  return H;
}

Vec as_vec(std::span<const double> v) {
  return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST_CASE("operators agree with the dense matrix") {
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t nx = 1 + trial % 8, ny = 1 + (trial * 3) % 8, B = 1 + trial % 4;
    const MaskCube m = test::random_masks(nx, ny, B, rng);
    const SensingOperator op(m);
    const Mat H = oracle_matrix(m);
    const VideoCube x = test::random_video(nx, ny, B, rng);
    const Measurement y = test::random_measurement(nx, ny, rng);

    CHECK(max_abs_diff(forward(x, op).values(), as_span(H * as_vec(x.values()))) <= 1e-12);
    CHECK(max_abs_diff(adjoint(y, op).values(), as_span(H.transpose() * as_vec(y.values()))) <= 1e-12);

    const Mat R = H * H.transpose();
    CHECK((R - Mat(R.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_abs_diff(op.r_diag(), as_span(R.diagonal())) <= 1e-12);

    const DenseMatrix D = dense_operator(op);
    CHECK(max_abs_diff(D.values, std::span<const double>(Mat(H.transpose()).data(), H.size())) == 0.0);
  }
}

TEST_CASE("projection lands on the data manifold and matches the pseudo-inverse form") {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t nx = 2 + trial % 7, ny = 1 + trial % 5, B = 1 + trial % 4;
    const MaskCube m = test::random_masks(nx, ny, B, rng);
    const SensingOperator op(m);
    const Mat H = oracle_matrix(m);
    const VideoCube v = test::random_video(nx, ny, B, rng);
    const Measurement y = test::random_measurement(nx, ny, rng);

    const Vec vv = as_vec(v.values());
    const Vec expect = vv + H.transpose() * (H * H.transpose()).ldlt().solve(as_vec(y.values()) - H * vv);
    const VideoCube x = project_onto_manifold(v, y, op);
    CHECK(max_abs_diff(x.values(), as_span(expect)) <= 1e-10);
    CHECK(max_abs_diff(forward(x, op).values(), y.values()) <= 1e-10);
  }
}

TEST_CASE("projection leaves never-sampled pixels alone") {
  MaskCube m(2, 2, 2, 1.0);
  m.at(0, 1, 0) = 0.0;
  m.at(0, 1, 1) = 0.0;
  const SensingOperator op(m);
  CHECK(op.zero_r_pixels() == 1);
  VideoCube v(2, 2, 2, 0.3);
  const Measurement y(2, 2, 1.0);
  const VideoCube x = project_onto_manifold(v, y, op);
  CHECK(x.at(0, 1, 0) == 0.3);
  CHECK(x.at(0, 0, 0) == doctest::Approx(0.5));
}

TEST_CASE("ADMM x-update solves the regularized normal equations") {
  Rng rng(13);
  for (double rho : {1e-3, 0.1, 2.0}) {
    const MaskCube m = test::random_masks(5, 4, 3, rng);
    const SensingOperator op(m);
    const Mat H = oracle_matrix(m);
    const VideoCube q = test::random_video(5, 4, 3, rng);
    const Measurement y = test::random_measurement(5, 4, rng);
    const Mat A = H.transpose() * H + rho * Mat::Identity(H.cols(), H.cols());
    const Vec expect = A.ldlt().solve(H.transpose() * as_vec(y.values()) + rho * as_vec(q.values()));
    CHECK(max_abs_diff(admm_x_update(q, y, op, rho).values(), as_span(expect)) <= 1e-10);
  }
}

TEST_CASE("gradient of the data term matches central differences") {
  Rng rng(14);
  const MaskCube m = test::random_masks(3, 4, 2, rng);
  const SensingOperator op(m);
  const VideoCube x = test::random_video(3, 4, 2, rng);
  const Measurement y = test::random_measurement(3, 4, rng);
  auto f = [&](const VideoCube& z) {
    const Measurement r = forward(z, op);
    double s = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) s += 0.5 * std::pow(y.values()[k] - r.values()[k], 2);
    return s;
  };
  const VideoCube g = gradient_f(x, y, op);
  const double h = 1e-6;
  for (std::size_t k = 0; k < x.size(); ++k) {
    VideoCube a = x, b = x;
    a.values()[k] += h;
    b.values()[k] -= h;
    CHECK(g.values()[k] == doctest::Approx((f(a) - f(b)) / (2 * h)).epsilon(1e-6));
  }
}

TEST_CASE("shape mismatches are rejected") {
  const SensingOperator op(MaskCube(4, 4, 2, 1.0));
  CHECK_THROWS_AS(forward(VideoCube(4, 4, 3), op), Error);
  CHECK_THROWS_AS(adjoint(Measurement(3, 4), op), Error);
  try {
    forward(VideoCube(4, 5, 2), op);
    FAIL("expected a throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::shape_mismatch);
  }
}

TEST_CASE("oversized dense operator is refused") {
  const SensingOperator op(MaskCube(64, 64, 8, 1.0));
  CHECK_THROWS_AS(dense_operator(op), Error);
}
