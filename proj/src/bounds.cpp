#include "stablab/bounds.hpp"

#include <cmath>

namespace stablab {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw BoundDomainError(what);
}

void require_common(const BoundInputs& in) {
  require(in.n >= 1, "n must be at least 1");
  require(in.T >= 1, "T must be at least 1");
  require(in.confidence > 0.0 && in.confidence <= 1.0, "confidence must lie in (0, 1]");
  require(in.M > 0.0, "M must be positive");
  require(in.sigma > 0.0, "sigma must be positive");
  require(in.L > 0.0, "L must be positive");
  require(in.c > 0.0, "c must be positive");
  require(in.f0 >= 0.0, "f0 must be nonnegative");
  require(in.nu2 >= 0.0, "nu2 must be nonnegative");
}

double need(const std::optional<double>& v, const char* name) {
  require(v.has_value(), std::string(name) + " is required");
  require(*v >= 0.0, std::string(name) + " must be nonnegative");
  return *v;
}

BoundReport start(const char* name, const BoundInputs& in) {
  BoundReport r;
  r.name = name;
  r.inputs = in;
  r.estimated = in.estimated_constants;
  return r;
}

void check(BoundReport& r, const std::string& name, bool pass) {
  r.checks.push_back(AssumptionCheck{name, pass});
  if (!pass) r.assumptions_violated = true;
}

double dn(std::size_t v) { return static_cast<double>(v); }

}  // namespace

BoundReport prop1_ms(const BoundInputs& in) {
  require_common(in);
  const double delta = need(in.delta_mean, "delta_mean");
  BoundReport r = start("prop1", in);
  r.value = 2.0 * in.M * in.M / dn(in.n) + 12.0 * in.M * in.sigma * delta;
  return r;
}

BoundReport thm1(const BoundInputs& in) {
  require_common(in);
  BoundReport r = start("thm1", in);
  check(r, "c < 1/L", in.c * in.L < 1.0);
  const double grad = std::sqrt(2.0 * in.L * in.f0 + 0.5 * in.nu2);
  const double inner = 2.0 * in.M * in.M + 24.0 * in.M * in.sigma * in.c * grad * std::log(dn(in.T));
  r.value = std::sqrt(inner / (dn(in.n) * in.confidence));
  return r;
}

namespace {

double thm2_value(const BoundInputs& in) {
  const double fstar = need(in.f_star, "f_star");
  const double n = dn(in.n);
  return 2.0 * in.M * in.M / n +
         (24.0 * in.M * in.sigma * in.c / n) *
             (std::sqrt(2.0 * in.L * fstar) * std::log(dn(in.T)) +
              std::sqrt(2.0 * in.L * in.f0 + 2.0 * in.nu2));
}

void gradient_dominance_checks(BoundReport& r, const BoundInputs& in) {
  const double gamma = need(in.gamma, "gamma");
  require(gamma > 0.0, "gamma must be positive");
  check(r, "gamma < L", gamma < in.L);
  check(r, "c < min(1/L, 1/(2 gamma))", in.c * in.L < 1.0 && 2.0 * in.c * gamma < 1.0);
}

}  // namespace

BoundReport thm2_ms(const BoundInputs& in) {
  require_common(in);
  BoundReport r = start("thm2", in);
  gradient_dominance_checks(r, in);
  r.value = thm2_value(in);
  return r;
}

BoundReport thm3(const BoundInputs& in) {
  require_common(in);
  BoundReport r = start("thm3", in);
  gradient_dominance_checks(r, in);
  r.value = std::sqrt(thm2_value(in) / in.confidence);
  return r;
}

BoundReport thm4(const BoundInputs& in) {
  require_common(in);
  const double lambda = need(in.lambda, "lambda");
  const double phi0 = need(in.phi0, "phi0");
  require(lambda > in.L, "thm4 requires lambda > L");
  BoundReport r = start("thm4", in);
  check(r, "c < 1/L", in.c * in.L < 1.0);
  const double inner = 2.0 * in.M * in.M +
                       (24.0 * in.M * in.sigma / (lambda - in.L)) * std::sqrt(in.L * phi0 + in.nu2);
  r.value = std::sqrt(inner / (dn(in.n) * in.confidence));
  return r;
}

BoundReport lemma_uniform(const BoundInputs& in) {
  require_common(in);
  const double beta = need(in.beta, "beta");
  const double rho = need(in.rho, "rho");
  BoundReport r = start("lemma-uniform", in);
  const double n = dn(in.n);
  r.value = 2.0 * beta + ((in.M + 4.0 * n * beta) / std::sqrt(2.0 * n) +
                          std::sqrt(2.0 * dn(in.T)) * rho) *
                             std::sqrt(std::log(2.0 / in.confidence));
  return r;
}

BoundReport thm5(const BoundInputs& in) {
  require_common(in);
  const double lambda = need(in.lambda, "lambda");
  require(lambda > in.L, "thm5 requires lambda > L");
  const double gap = lambda - in.L;
  require(2.0 * in.c * gap > 1.0 && in.c * gap < 1.0,
          "thm5 requires 1/(2(lambda - L)) < c < 1/(lambda - L)");
  BoundReport r = start("thm5", in);
  const double s2 = in.sigma * in.sigma;
  const double root_n = std::sqrt(dn(in.n));
  r.value = (in.M / root_n + 4.0 * s2 / (root_n * gap) +
             4.0 * s2 * in.c / std::pow(dn(in.T), in.c * gap - 0.5)) *
            std::sqrt(std::log(2.0 / in.confidence));
  return r;
}

GradNormBounds grad_norm_bounds(const BoundInputs& in, std::optional<double> t) {
  require(in.L > 0.0, "L must be positive");
  require(in.f0 >= 0.0 && in.nu2 >= 0.0, "f0 and nu2 must be nonnegative");
  GradNormBounds b;
  b.nonconvex = std::sqrt(2.0 * in.L * in.f0 + 0.5 * in.nu2);
  if (t) {
    require(*t >= 1.0, "t must be at least 1");
    const double fstar = need(in.f_star, "f_star");
    b.gradient_dominant =
        std::sqrt(2.0 * in.L * fstar + (2.0 * in.L * in.f0 + 2.0 * in.nu2) / *t);
  }
  return b;
}

}  // namespace stablab
