#include "entbridge/heat.hpp"
#include "generators.hpp"

#include <doctest.h>

using namespace entbridge;

namespace {

std::vector<FiniteSpace> sample_spaces() {
  std::vector<FiniteSpace> out;
  out.push_back(build_interval_grid(24, 1.0, BoundaryCondition::Neumann));
  out.push_back(build_interval_grid(20, 1.0, BoundaryCondition::Periodic));
  testgen::Gen g(7);
  for (int k = 0; k < 4; ++k) out.push_back(g.instance(g.integer(3, 8)).space);
  return out;
}

}  // namespace

TEST_CASE("heat kernel is symmetric, positive and stochastic") {
  for (const FiniteSpace& s : sample_spaces()) {
    const HeatSemigroup heat(s);
    CHECK(heat.reconstruction_error() < 1e-12);
    for (double t : {0.01, 0.1, 1.0}) {
      const Matrix r = heat.kernel(t);
      CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(r.minCoeff() > -1e-12);
      CHECK(((r * s.measure()).array() - 1.0).abs().maxCoeff() < 1e-10);
      const Matrix r2 = heat.kernel(2 * t);
      CHECK((r * s.measure().asDiagonal() * r - r2).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("log kernel agrees with the spectral kernel where the latter is accurate") {
  for (const FiniteSpace& s : sample_spaces()) {
    const HeatSemigroup heat(s);
    for (double t : {0.01, 0.1, 1.0}) {
      const Matrix r = heat.kernel(t);
      const Matrix lr = heat.log_kernel(t);
      CHECK((lr.array().exp().matrix() - r).cwiseAbs().maxCoeff() < 1e-11 * std::max(1.0, r.maxCoeff()));
    }
  }
}

TEST_CASE("log kernel keeps far-field entries that underflow the spectral route") {
  const FiniteSpace s = build_interval_grid(64, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Matrix lr = heat.log_kernel(1e-5);
  CHECK(std::isfinite(lr(0, 63)));
  CHECK(lr(0, 63) < -300.0);
  // Monotone decay away from the diagonal.
  for (int j = 1; j < 64; ++j) CHECK(lr(0, j) < lr(0, j - 1));
}

TEST_CASE("log_apply by uniformization matches the linear semigroup") {
  testgen::Gen g(3);
  for (const FiniteSpace& s : sample_spaces()) {
    const HeatSemigroup heat(s);
    const Vector v = g.weights(s.size(), 0.3);
    const Vector lv = v.array().log().matrix();
    for (double t : {1e-3, 0.05, 0.5}) {
      const Vector exact = heat.apply(t, v);
      const Vector viaVec = heat.log_apply(t, lv).array().exp().matrix();
      const Vector viaKernel = heat.log_apply(heat.log_kernel(t), lv).array().exp().matrix();
      CHECK((viaVec - exact).cwiseAbs().maxCoeff() < 1e-10 * v.maxCoeff());
      CHECK((viaKernel - exact).cwiseAbs().maxCoeff() < 1e-10 * v.maxCoeff());
    }
  }
}

TEST_CASE("log_matmul reproduces the product of exponentials") {
  testgen::Gen g(5);
  const Matrix A = Matrix::NullaryExpr(4, 6, [&](Eigen::Index, Eigen::Index) { return g.uniform(-3, 3); });
  const Matrix B = Matrix::NullaryExpr(6, 3, [&](Eigen::Index, Eigen::Index) { return g.uniform(-3, 3); });
  const Matrix C = log_matmul(A, B);
  const Matrix ref = (A.array().exp().matrix() * B.array().exp().matrix()).array().log().matrix();
  CHECK((C - ref).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("t = 0 gives the identity") {
  const FiniteSpace s = build_interval_grid(6, 1.0, BoundaryCondition::Neumann);
  const HeatSemigroup heat(s);
  const Vector v = Vector::LinSpaced(6, 1.0, 2.0);
  CHECK((heat.apply(0.0, v) - v).cwiseAbs().maxCoeff() < 1e-13);
  const Matrix lr = heat.log_kernel(0.0);
  CHECK(lr(0, 1) == -std::numeric_limits<double>::infinity());
}
