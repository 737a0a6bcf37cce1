#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stablab {

/// Every symbol consumed by the generalization bounds. Logarithms are natural.
struct BoundInputs {
  std::size_t n = 1;
  std::size_t T = 1;
  /// Confidence parameter: the bound holds with probability at least 1 - confidence.
  double confidence = 0.1;
  double M = 1.0;
  double sigma = 1.0;
  double L = 1.0;
  /// Step-size constant c.
  double c = 0.1;
  /// f(w0), population risk at the initial point.
  double f0 = 0.0;
  /// E_S[nu_S^2].
  double nu2 = 0.0;
  std::optional<double> gamma;
  std::optional<double> lambda;
  /// E_S[f_S^*].
  std::optional<double> f_star;
  /// Phi(w0) = f(w0) + lambda h(w0).
  std::optional<double> phi0;
  /// Measured E[delta_T].
  std::optional<double> delta_mean;
  std::optional<double> beta;
  std::optional<double> rho;
  bool estimated_constants = false;
};

struct AssumptionCheck {
  std::string name;
  bool pass = true;
};

struct BoundReport {
  std::string name;
  double value = 0.0;
  std::vector<AssumptionCheck> checks;
  BoundInputs inputs;
  bool estimated = false;
  bool assumptions_violated = false;
};

/// Raised when a formula is undefined for its inputs (missing symbol,
/// nonpositive constant, lambda <= L where the bound divides by lambda - L).
class BoundDomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mean-square bound 2M^2/n + 12 M sigma E[delta_T].
BoundReport prop1_ms(const BoundInputs& in);

/// High-probability bound for nonconvex SGD with the slow-log schedule.
BoundReport thm1(const BoundInputs& in);

/// Mean-square bound under gradient dominance.
BoundReport thm2_ms(const BoundInputs& in);

/// sqrt(thm2_ms / confidence).
BoundReport thm3(const BoundInputs& in);

/// High-probability bound for proximal SGD with a strongly convex regularizer.
BoundReport thm4(const BoundInputs& in);

/// 2 beta + ((M + 4 n beta)/sqrt(2n) + sqrt(2T) rho) sqrt(log(2/confidence)).
BoundReport lemma_uniform(const BoundInputs& in);

/// Exponential-concentration bound for proximal SGD. Requires
/// 1/(2(lambda - L)) < c < 1/(lambda - L).
BoundReport thm5(const BoundInputs& in);

struct GradNormBounds {
  /// sqrt(2 L f0 + nu2 / 2).
  double nonconvex = 0.0;
  /// sqrt(2 L f_star + (2 L f0 + 2 nu2) / t), when f_star and t are given.
  std::optional<double> gradient_dominant;
};

GradNormBounds grad_norm_bounds(const BoundInputs& in, std::optional<double> t = std::nullopt);

}  // namespace stablab
