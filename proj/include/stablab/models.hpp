#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stablab/data.hpp"
#include "stablab/types.hpp"

namespace stablab {

enum class ModelKind { Logistic, LeastSquares, TinyMLP };

std::string to_string(ModelKind kind);

/// Per-sample loss l(w; z) with its analytic gradient. Implementations are
/// immutable and safe to evaluate from several threads.
class LossModel {
 public:
  virtual ~LossModel() = default;

  virtual ModelKind kind() const = 0;
  virtual Eigen::Index param_dim() const = 0;
  virtual Eigen::Index input_dim() const = 0;

  /// Nonnegative loss; throws DimensionError on mismatched w or z.
  double loss(const Vector& w, const Sample& z) const;
  Vector grad(const Vector& w, const Sample& z) const;
  /// Gradient written into `out` (resized as needed); avoids allocation in
  /// inner loops.
  void grad_into(const Vector& w, const Sample& z, Vector& out) const;

 protected:
  virtual double loss_unchecked(const Vector& w, const Sample& z) const = 0;
  virtual void grad_unchecked(const Vector& w, const Sample& z, Vector& out) const = 0;

 private:
  void check(const Vector& w, const Sample& z) const;
};

/// log(1 + exp(-y <w, x>)).
class LogisticModel final : public LossModel {
 public:
  explicit LogisticModel(Eigen::Index d) : d_(d) {}
  ModelKind kind() const override { return ModelKind::Logistic; }
  Eigen::Index param_dim() const override { return d_; }
  Eigen::Index input_dim() const override { return d_; }

 protected:
  double loss_unchecked(const Vector& w, const Sample& z) const override;
  void grad_unchecked(const Vector& w, const Sample& z, Vector& out) const override;

 private:
  Eigen::Index d_;
};

/// (<w, x> - y)^2 / 2.
class LeastSquaresModel final : public LossModel {
 public:
  explicit LeastSquaresModel(Eigen::Index d) : d_(d) {}
  ModelKind kind() const override { return ModelKind::LeastSquares; }
  Eigen::Index param_dim() const override { return d_; }
  Eigen::Index input_dim() const override { return d_; }

 protected:
  double loss_unchecked(const Vector& w, const Sample& z) const override;
  void grad_unchecked(const Vector& w, const Sample& z, Vector& out) const override;

 private:
  Eigen::Index d_;
};

/// Fully connected network with tanh hidden layers and a scalar linear output,
/// trained on (net(w, x) - y)^2 / 2. Parameters are packed layer by layer as
/// a row-major weight matrix followed by its bias.
class TinyMlpModel final : public LossModel {
 public:
  TinyMlpModel(Eigen::Index input_dim, std::vector<Eigen::Index> hidden);

  ModelKind kind() const override { return ModelKind::TinyMLP; }
  Eigen::Index param_dim() const override { return param_dim_; }
  Eigen::Index input_dim() const override { return widths_.front(); }
  const std::vector<Eigen::Index>& widths() const { return widths_; }

  double predict(const Vector& w, const Vector& x) const;
  /// Gradient of the network output (not the loss) with respect to w.
  Vector output_gradient(const Vector& w, const Vector& x) const;

 protected:
  double loss_unchecked(const Vector& w, const Sample& z) const override;
  void grad_unchecked(const Vector& w, const Sample& z, Vector& out) const override;

 private:
  double forward_backward(const Vector& w, const Vector& x, double out_seed, Vector* grad) const;

  std::vector<Eigen::Index> widths_;
  Eigen::Index param_dim_ = 0;
};

std::unique_ptr<LossModel> make_model(ModelKind kind, Eigen::Index input_dim,
                                      std::vector<Eigen::Index> hidden = {8});

/// Assumption constants certified on the parameter ball ||w|| <= radius.
struct Constants {
  double L = 0.0;
  double sigma = 0.0;
  double M = 0.0;
  std::optional<double> gamma;
  double radius = 0.0;
  bool estimated = false;
};

/// Logistic and least squares constants are closed form. TinyMLP constants
/// are sampled suprema over the ball inflated by 1.5 and flagged estimated.
Constants constants(const LossModel& model, const Dataset& ds, double radius,
                    std::uint64_t seed = 0);

/// PL constant of the least-squares empirical risk: the smallest nonzero
/// eigenvalue of X^T X / n.
double gradient_dominance_constant(const Dataset& ds);

double empirical_risk(const LossModel& model, const Dataset& ds, const Vector& w);
Vector full_gradient(const LossModel& model, const Dataset& ds, const Vector& w);

struct SelfBoundingReport {
  double worst_ratio = 0.0;
  std::size_t trials = 0;
  bool pass = false;
};

/// Checks ||grad l(w;z)|| <= sqrt(2 L l(w;z)) at random w in the certified
/// ball and random z from the dataset. The ratio is taken as 0 where both
/// sides vanish.
SelfBoundingReport check_self_bounding(const LossModel& model, const Dataset& ds,
                                       const Constants& k, std::size_t trials,
                                       std::uint64_t seed);

/// Uniform draw from the ball of the given radius.
Vector random_in_ball(Eigen::Index dim, double radius, Rng& rng);

}  // namespace stablab
