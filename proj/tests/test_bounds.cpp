#include <doctest.h>

#include <cmath>

#include "bound_oracle.hpp"
#include "stablab/bounds.hpp"
#include "stablab/rng.hpp"

using namespace stablab;

namespace {

BoundInputs base() {
  BoundInputs in;
  in.n = 1000;
  in.T = 10000;
  in.confidence = 0.1;
  in.M = 1.0;
  in.sigma = 1.0;
  in.L = 1.0;
  in.c = 0.1;
  in.f0 = 0.5;
  in.nu2 = 0.25;
  return in;
}

oracle::In to_oracle(const BoundInputs& in) {
  oracle::In p{static_cast<long double>(in.n), static_cast<long double>(in.T), in.confidence,
               in.M, in.sigma, in.L, in.c, in.f0, in.nu2};
  p.gamma = in.gamma.value_or(0);
  p.lambda = in.lambda.value_or(0);
  p.fstar = in.f_star.value_or(0);
  p.phi0 = in.phi0.value_or(0);
  p.dmean = in.delta_mean.value_or(0);
  p.beta = in.beta.value_or(0);
  p.rho = in.rho.value_or(0);
  return p;
}

double rel(double a, long double b) {
  return static_cast<double>(std::fabs((a - b) / b));
}

}  // namespace

TEST_CASE("mean-square bound") {
  BoundInputs in = base();
  in.n = 100;
  in.delta_mean = 0.0;
  CHECK(prop1_ms(in).value == doctest::Approx(0.02));
  in.delta_mean = 0.05;
  CHECK(prop1_ms(in).value == doctest::Approx(0.62));
  const double first = 2.0 / 100;
  in.n = 200;
  CHECK(prop1_ms(in).value == doctest::Approx(0.62 - first / 2));
  in.delta_mean.reset();
  CHECK_THROWS_AS(prop1_ms(in), BoundDomainError);
}

TEST_CASE("nonconvex high-probability bound") {
  BoundInputs in = base();
  CHECK(thm1(in).value == doctest::Approx(0.504437).epsilon(1e-5));
  CHECK_FALSE(thm1(in).assumptions_violated);
  BoundInputs degenerate = in;
  degenerate.nu2 = 0;
  degenerate.f0 = 0;
  CHECK(thm1(degenerate).value == doctest::Approx(std::sqrt(2.0 / (1000 * 0.1))));

  const double v = thm1(in).value;
  BoundInputs more = in;
  more.nu2 = 0.5;
  CHECK(thm1(more).value > v);
  more = in;
  more.T = 20000;
  CHECK(thm1(more).value > v);
  more = in;
  more.n = 2000;
  CHECK(thm1(more).value < v);

  in.c = 2.0;
  CHECK(thm1(in).assumptions_violated);
}

TEST_CASE("gradient-dominance bounds") {
  BoundInputs in = base();
  in.f_star = 0.01;
  in.gamma = 0.5;
  CHECK(thm2_ms(in).value == doctest::Approx(0.0080654).epsilon(1e-4));
  CHECK(thm3(in).value == doctest::Approx(std::sqrt(thm2_ms(in).value / 0.1)));
  CHECK(thm3(in).value == doctest::Approx(0.28400).epsilon(1e-4));
  BoundInputs one = in;
  one.confidence = 1.0;
  CHECK(thm3(one).value == doctest::Approx(std::sqrt(thm2_ms(in).value)));
  BoundInputs tighter = in;
  tighter.confidence = 0.05;
  CHECK(thm3(tighter).value > thm3(in).value);

  BoundInputs interp = in;
  interp.f_star = 0.0;
  BoundInputs longer = interp;
  longer.T = 1000000;
  CHECK(thm2_ms(interp).value == doctest::Approx(thm2_ms(longer).value).epsilon(1e-15));

  // With small f_star the gradient-dominance rate beats the mean-square
  // bound built from the nonconvex stability term 2 c sqrt(2 L f0 + nu2/2) ln T / n.
  for (double n : {100.0, 1000.0, 10000.0}) {
    for (double T : {100.0, 10000.0, 1e6}) {
      BoundInputs g = in;
      g.n = static_cast<std::size_t>(n);
      g.T = static_cast<std::size_t>(T);
      g.f_star = 1e-6;
      g.delta_mean = 2.0 * g.c * std::sqrt(2.0 * g.L * g.f0 + 0.5 * g.nu2) * std::log(T) / n;
      CHECK(thm2_ms(g).value <= prop1_ms(g).value);
    }
  }

  in.gamma = 2.0;
  CHECK(thm2_ms(in).assumptions_violated);
  in.gamma.reset();
  CHECK_THROWS_AS(thm2_ms(in), BoundDomainError);
}

TEST_CASE("proximal bound") {
  BoundInputs in = base();
  in.lambda = 3.0;
  in.phi0 = 0.5;
  CHECK(thm4(in).value == doctest::Approx(0.352029).epsilon(1e-5));
  BoundInputs degenerate = in;
  degenerate.nu2 = 0;
  degenerate.phi0 = 0;
  CHECK(thm4(degenerate).value == doctest::Approx(std::sqrt(2.0 / 100.0)));
  BoundInputs stronger = in;
  stronger.lambda = 5.0;
  CHECK(thm4(stronger).value < thm4(in).value);
  in.lambda = 1.0;
  CHECK_THROWS_AS(thm4(in), BoundDomainError);
  in.lambda = 0.5;
  CHECK_THROWS_AS(thm4(in), BoundDomainError);
}

TEST_CASE("uniform-stability bounds") {
  BoundInputs in = base();
  in.beta = 0.0;
  in.rho = 0.0;
  CHECK(lemma_uniform(in).value == doctest::Approx(std::sqrt(std::log(20.0)) / std::sqrt(2000.0)));
  in.beta = 1e-3;
  in.rho = 1e-3;
  CHECK(lemma_uniform(in).value == doctest::Approx(0.440276).epsilon(1e-5));
  BoundInputs more = in;
  more.rho = 2e-3;
  CHECK(lemma_uniform(more).value - lemma_uniform(in).value ==
        doctest::Approx(1e-3 * std::sqrt(2.0 * 10000 * std::log(20.0))));

  BoundInputs p = base();
  p.lambda = 3.0;
  p.c = 0.375;
  const double s = std::sqrt(std::log(20.0));
  const double expected =
      (1 / std::sqrt(1000.0) + 4 / (std::sqrt(1000.0) * 2) + 4 * 0.375 / std::pow(1e4, 0.25)) * s;
  CHECK(thm5(p).value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(thm5(p).value == doctest::Approx(0.42382).epsilon(1e-4));
  BoundInputs larger = p;
  larger.n = 4000;
  CHECK(thm5(larger).value < thm5(p).value);
  larger = p;
  larger.T = 100000;
  CHECK(thm5(larger).value < thm5(p).value);
  // c (lambda - L) = 0.75: the tail term decays like T^-1/4.
  larger.T = 100000000;
  const double third = thm5(larger).value / s - 1 / std::sqrt(1000.0) - 2 / std::sqrt(1000.0);
  CHECK(third == doctest::Approx(4 * 0.375 / 100.0).epsilon(1e-9));
  p.c = 0.2;
  CHECK_THROWS_AS(thm5(p), BoundDomainError);
  p.c = 0.6;
  CHECK_THROWS_AS(thm5(p), BoundDomainError);
}

TEST_CASE("gradient-norm bounds") {
  BoundInputs in = base();
  CHECK(grad_norm_bounds(in).nonconvex == doctest::Approx(1.06066).epsilon(1e-5));
  BoundInputs zero = in;
  zero.f0 = 0;
  zero.nu2 = 0;
  CHECK(grad_norm_bounds(zero).nonconvex == 0.0);
  in.f_star = 0.02;
  const auto far = grad_norm_bounds(in, 1e12);
  REQUIRE(far.gradient_dominant);
  CHECK(*far.gradient_dominant == doctest::Approx(std::sqrt(2.0 * 0.02)).epsilon(1e-9));
  CHECK(*grad_norm_bounds(in, 10.0).gradient_dominant > *far.gradient_dominant);
}

TEST_CASE("domain errors") {
  BoundInputs in = base();
  in.n = 0;
  CHECK_THROWS_AS(thm1(in), BoundDomainError);
  in = base();
  in.confidence = 0.0;
  CHECK_THROWS_AS(thm1(in), BoundDomainError);
  in = base();
  in.nu2 = -1.0;
  CHECK_THROWS_AS(thm1(in), BoundDomainError);
  in = base();
  in.estimated_constants = true;
  CHECK(thm1(in).estimated);
}

TEST_CASE("library bounds agree with the independent oracle") {
  Rng rng(123);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 2000; ++trial) {
    BoundInputs in;
    in.n = 10 + static_cast<std::size_t>(u(rng) * 1e5);
    in.T = 2 + static_cast<std::size_t>(u(rng) * 1e6);
    in.confidence = 0.01 + 0.98 * u(rng);
    in.M = 0.1 + 10 * u(rng);
    in.sigma = 0.1 + 10 * u(rng);
    in.L = 0.05 + 5 * u(rng);
    in.f0 = 3 * u(rng);
    in.nu2 = 3 * u(rng);
    in.f_star = u(rng) * in.f0;
    in.gamma = 0.01 + u(rng);
    in.delta_mean = u(rng);
    in.beta = 0.01 * u(rng);
    in.rho = 0.01 * u(rng);
    in.lambda = in.L * (1.01 + 5 * u(rng));
    in.phi0 = 3 * u(rng);
    in.c = (0.51 + 0.48 * u(rng)) / (*in.lambda - in.L);
    const oracle::In p = to_oracle(in);
    worst = std::max(worst, rel(prop1_ms(in).value, oracle::prop1(p)));
    worst = std::max(worst, rel(thm1(in).value, oracle::thm1(p)));
    worst = std::max(worst, rel(thm2_ms(in).value, oracle::thm2(p)));
    worst = std::max(worst, rel(thm3(in).value, oracle::thm3(p)));
    worst = std::max(worst, rel(thm4(in).value, oracle::thm4(p)));
    worst = std::max(worst, rel(lemma_uniform(in).value, oracle::lemma_uniform(p)));
    worst = std::max(worst, rel(thm5(in).value, oracle::thm5(p)));
    worst = std::max(worst, rel(grad_norm_bounds(in).nonconvex, oracle::grad_nonconvex(p)));
    const double t = 1 + u(rng) * 1e4;
    worst = std::max(worst, rel(*grad_norm_bounds(in, t).gradient_dominant,
                                oracle::grad_dominant(p, t)));
  }
  CHECK(worst < 1e-12);
}
