#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "stablab/data.hpp"
#include "stablab/models.hpp"
#include "stablab/optim.hpp"
#include "stablab/proxreg.hpp"

namespace stablab {

/// Exact stochastic-gradient variance at w under uniform sampling of S:
/// (1/n) sum_k ||grad l(w; z_k) - grad f_S(w)||^2.
double variance_at(const LossModel& model, const Dataset& ds, const Vector& w);

struct VarianceEstimate {
  /// variance_at for each iterate in the window, oldest first.
  std::vector<double> values;
  double mean = 0.0;
  std::size_t window = 0;
  double std_error = 0.0;
};

/// Mean of variance_at over the last `window` stored iterates of `traj`.
/// Path-based, not a supremum over the parameter set.
VarianceEstimate estimate_nu2(const LossModel& model, const Dataset& ds, const Trajectory& traj,
                              std::size_t window);

struct ReferenceSolution {
  Vector w;
  double risk = 0.0;
  bool converged = false;
};

/// Deterministic full-batch estimate of f_S^*: minimum-norm normal equations
/// for least squares, damped Newton for logistic regression and backtracking
/// gradient descent otherwise, each stopped at gradient norm 1e-8.
ReferenceSolution reference_minimum(const LossModel& model, const Dataset& ds);

struct OnAverageConfig {
  std::size_t datasets = 5;
  std::size_t paths = 4;
  std::size_t n = 100;
  std::size_t T = 1000;
  StepSchedule schedule;
  Vector w0;
  std::optional<Regularizer> reg;
  std::uint64_t seed = 0;
  std::size_t window = 50;
  std::size_t thin = 10;
  std::optional<double> radius;
  /// Skip the f_S^* reference solve.
  bool skip_reference = false;
};

struct StabilityEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t replicas = 0;
  /// Mean of delta_t over valid replicas, t = 0..T.
  std::vector<double> mean_curve;
};

struct OnAverageEstimate {
  double nu2_mean = 0.0;
  double nu2_stderr = 0.0;
  StabilityEstimate stability;
  double f_star_mean = 0.0;
  double f_star_stderr = 0.0;
  std::size_t attempted = 0;
  std::size_t invalid = 0;
};

/// Monte Carlo estimate of E_S[nu_S^2], E[delta_T] and E_S[f_S^*]. Each of
/// `datasets` replicas S_i is paired with a fresh sample for S̄_i and run
/// on `paths` coupled sample paths. Trials that leave the certified ball or
/// diverge are excluded; more than 20% exclusions is an error.
OnAverageEstimate estimate_on_average(const LossModel& model, const DataSource& source,
                                      const OnAverageConfig& config);

struct UniformProbeConfig {
  std::vector<PerturbedPair> pairs;
  std::vector<Sample> probes;
  std::vector<std::size_t> t0_grid;
  std::size_t paths = 4;
  std::size_t T = 1000;
  StepSchedule schedule;
  Vector w0;
  std::uint64_t seed = 0;
};

/// Empirical lower bounds on the uniform stability constants:
///   beta_hat = max over pairs and probes of mean over paths |l(w_{T,S}; z) - l(w_{T,S̄}; z)|
///   rho_hat  = max over datasets, paths, t0 and probes of |l(w_{T,xi}; z) - l(w_{T,xi'}; z)|
struct UniformProbe {
  double beta_hat = 0.0;
  double rho_hat = 0.0;
  std::size_t beta_probes = 0;
  std::size_t rho_probes = 0;
  double max_coupled_delta = 0.0;
  double max_path_delta = 0.0;
};

UniformProbe probe_uniform(const LossModel& model, const Regularizer* reg,
                           const UniformProbeConfig& config);

struct GapEstimate {
  double train_risk = 0.0;
  double test_risk = 0.0;
  double gap = 0.0;
  std::size_t held_out_size = 0;
};

GapEstimate generalization_gap(const LossModel& model, const Vector& w, const Dataset& train,
                               const Dataset& held_out);

}  // namespace stablab
