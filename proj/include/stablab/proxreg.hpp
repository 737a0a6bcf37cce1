#pragma once

#include <cstddef>
#include <string>

#include "stablab/types.hpp"

namespace stablab {

enum class RegKind { Ridge, Tikhonov, ElasticNet };

std::string to_string(RegKind kind);

/// A 1-strongly convex, nonnegative regularizer h carried with its weight
/// lambda. The regularized objective is f_S + lambda * h.
///
///   Ridge       h(w) = ||w||^2 / 2
///   Tikhonov    h(w) = ||G w||^2 / 2, with G^T G >= I
///   ElasticNet  h(w) = mu ||w||_1 + ||w||^2 / 2
class Regularizer {
 public:
  static Regularizer ridge(double lambda);
  /// If the smallest singular value of `gamma` is below 1 the matrix is
  /// rescaled so that it equals 1, and rescaled() reports true.
  static Regularizer tikhonov(Matrix gamma, double lambda);
  static Regularizer elastic_net(double mu, double lambda);

  RegKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  double mu() const { return mu_; }
  const Matrix& gamma() const { return gamma_; }
  bool rescaled() const { return rescaled_; }

  /// h(w), without the lambda weight.
  double value(const Vector& w) const;

  /// prox of alpha * lambda * h:
  ///   argmin_u lambda h(u) + ||u - w||^2 / (2 alpha).
  Vector prox(const Vector& w, double alpha) const;

  /// Quadratic part of h as u^T Q u / 2: identity for Ridge and ElasticNet,
  /// G^T G for Tikhonov.
  Matrix quadratic_form(Eigen::Index dim) const;

 private:
  Regularizer(RegKind kind, double lambda) : kind_(kind), lambda_(lambda) {}

  RegKind kind_;
  double lambda_;
  double mu_ = 0.0;
  Matrix gamma_;
  // Eigendecomposition of G^T G, used to solve (I + a G^T G) u = w for any a.
  Matrix basis_;
  Vector spectrum_;
  bool rescaled_ = false;
};

struct GradientMapInput {
  Vector w;
  Vector g;
  double alpha = 0.0;
};

/// G(w, g) = (w - prox(w - alpha g, alpha)) / alpha.
Vector gradient_map(const Regularizer& reg, const GradientMapInput& in);

struct ProxOracleReport {
  Vector oracle;
  Vector prox;
  double residual = 0.0;
  std::size_t sweeps = 0;
};

/// Minimizes lambda h(u) + ||u - w||^2 / (2 alpha) by exact coordinate
/// descent (soft-thresholded Gauss-Seidel sweeps on the generic
/// quadratic-plus-l1 form) and compares with Regularizer::prox.
ProxOracleReport prox_oracle_check(const Regularizer& reg, const Vector& w, double alpha);

}  // namespace stablab
