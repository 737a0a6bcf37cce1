#include <doctest.h>

#include <cmath>

#include "stablab/proxreg.hpp"
#include "stablab/rng.hpp"

using namespace stablab;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

Vector gaussian(Eigen::Index d, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

std::vector<Regularizer> family(Eigen::Index d, Rng& rng) {
  Matrix gamma = Matrix::Identity(d, d) * 1.5 + 0.3 * gaussian(d * d, rng).reshaped(d, d);
  return {Regularizer::ridge(0.7), Regularizer::elastic_net(0.4, 1.3),
          Regularizer::tikhonov(gamma, 0.9)};
}

}  // namespace

TEST_CASE("ridge prox by hand") {
  const Vector u = Regularizer::ridge(1.0).prox(vec({2.0, -2.0}), 1.0);
  CHECK(u[0] == doctest::Approx(1.0));
  CHECK(u[1] == doctest::Approx(-1.0));
}

TEST_CASE("prox tends to the identity as the step vanishes") {
  Rng rng(1);
  const Vector w = gaussian(5, rng);
  for (const auto& reg : family(5, rng)) CHECK((reg.prox(w, 1e-12) - w).norm() < 1e-9);
}

TEST_CASE("reductions") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Vector w = gaussian(4, rng, 3.0);
    const double alpha = 0.1 + trial * 0.05;
    CHECK((Regularizer::elastic_net(0.0, 2.0).prox(w, alpha) - Regularizer::ridge(2.0).prox(w, alpha))
              .norm() == 0.0);
    CHECK((Regularizer::tikhonov(Matrix::Identity(4, 4), 2.0).prox(w, alpha) -
           Regularizer::ridge(2.0).prox(w, alpha))
              .norm() < 1e-10);
  }
}

TEST_CASE("elastic net soft threshold") {
  const auto reg = Regularizer::elastic_net(1.0, 1.0);
  const Vector u = reg.prox(vec({0.1, -3.0}), 0.5);
  CHECK(u[0] == 0.0);
  // (|w| - alpha lambda mu) / (1 + alpha lambda) with the sign of w.
  CHECK(u[1] == doctest::Approx(-2.5 / 1.5));
}

TEST_CASE("regularizer values") {
  const Vector w = vec({3.0, -4.0});
  CHECK(Regularizer::ridge(5.0).value(w) == doctest::Approx(12.5));
  CHECK(Regularizer::elastic_net(0.5, 5.0).value(w) == doctest::Approx(0.5 * 7.0 + 12.5));
  const Matrix g = vec({2.0, 1.0}).asDiagonal();
  CHECK(Regularizer::tikhonov(g, 1.0).value(w) == doctest::Approx(0.5 * (36.0 + 16.0)));
}

TEST_CASE("tikhonov with a small singular value is rescaled") {
  const Matrix g = vec({0.5, 2.0}).asDiagonal();
  const auto reg = Regularizer::tikhonov(g, 1.0);
  CHECK(reg.rescaled());
  Eigen::JacobiSVD<Matrix> svd(reg.gamma());
  CHECK(svd.singularValues().minCoeff() == doctest::Approx(1.0));
  CHECK_FALSE(Regularizer::tikhonov(Matrix::Identity(2, 2) * 2.0, 1.0).rescaled());
}

TEST_CASE("prox agrees with the coordinate-descent oracle") {
  Rng rng(3);
  const Vector w = gaussian(6, rng);
  CHECK(prox_oracle_check(Regularizer::ridge(2.0), w, 0.3).residual < 1e-8);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index d = 1 + trial % 7;
    std::uniform_real_distribution<double> step(0.01, 3.0);
    for (const auto& reg : family(d, rng)) {
      const auto report = prox_oracle_check(reg, gaussian(d, rng, 4.0), step(rng));
      CHECK(report.residual < 1e-8);
    }
  }
}

TEST_CASE("gradient map") {
  const Vector g = gradient_map(Regularizer::ridge(1.0), {Vector::Zero(2), vec({1.0, 0.0}), 1.0});
  CHECK(g[0] == doctest::Approx(0.5));
  CHECK(g[1] == doctest::Approx(0.0));

  const Vector gs = vec({0.3, -1.1, 2.0});
  const Vector gm = gradient_map(Regularizer::ridge(1e-12), {vec({1.0, 2.0, 3.0}), gs, 0.5});
  CHECK((gm - gs).norm() < 1e-9);
}

TEST_CASE("prox contraction and gradient-map nonexpansiveness") {
  Rng rng(4);
  std::uniform_real_distribution<double> step(0.01, 2.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Eigen::Index d = 1 + trial % 9;
    for (const auto& reg : family(d, rng)) {
      const double alpha = step(rng);
      const Vector w = gaussian(d, rng, 2.0), v = gaussian(d, rng, 2.0);
      const Vector g1 = gaussian(d, rng), g2 = gaussian(d, rng);
      CHECK((reg.prox(w, alpha) - reg.prox(v, alpha)).norm() <=
            (w - v).norm() / (1.0 + alpha * reg.lambda()) + 1e-9);
      CHECK((gradient_map(reg, {w, g1, alpha}) - gradient_map(reg, {w, g2, alpha})).norm() <=
            (g1 - g2).norm() + 1e-9);
    }
  }
}

TEST_CASE("invalid regularizers") {
  CHECK_THROWS(Regularizer::ridge(0.0));
  CHECK_THROWS(Regularizer::ridge(-1.0));
  CHECK_THROWS(Regularizer::elastic_net(-0.1, 1.0));
  CHECK_THROWS(Regularizer::tikhonov(Matrix::Zero(2, 3), 1.0));
}
