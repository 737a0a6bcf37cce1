#include "stablab/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "stablab/stats.hpp"

namespace stablab {

double variance_at(const LossModel& model, const Dataset& ds, const Vector& w) {
  if (ds.empty()) throw std::invalid_argument("variance_at: dataset is empty");
  const std::size_t n = ds.size();
  std::vector<Vector> grads(n);
  Vector mean_grad = Vector::Zero(model.param_dim());
  for (std::size_t k = 0; k < n; ++k) {
    model.grad_into(w, ds[k], grads[k]);
    mean_grad += grads[k];
  }
  mean_grad /= static_cast<double>(n);
  double total = 0.0;
  for (const auto& g : grads) total += (g - mean_grad).squaredNorm();
  return total / static_cast<double>(n);
}

VarianceEstimate estimate_nu2(const LossModel& model, const Dataset& ds, const Trajectory& traj,
                              std::size_t window) {
  if (window == 0) throw std::invalid_argument("estimate_nu2: window must be positive");
  if (window > traj.stored.size()) {
    throw std::invalid_argument("estimate_nu2: window " + std::to_string(window) +
                                " exceeds the " + std::to_string(traj.stored.size()) +
                                " recorded iterates");
  }
  VarianceEstimate est;
  est.window = window;
  for (std::size_t i = traj.stored.size() - window; i < traj.stored.size(); ++i) {
    est.values.push_back(variance_at(model, ds, traj.stored[i]));
  }
  est.mean = mean(est.values);
  est.std_error = standard_error(est.values);
  return est;
}

namespace {

constexpr double kReferenceTolerance = 1e-8;

ReferenceSolution least_squares_minimum(const LossModel& model, const Dataset& ds) {
  const Matrix x = ds.design_matrix();
  Vector y(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) y[static_cast<Eigen::Index>(i)] = ds[i].label;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(x);
  ReferenceSolution sol;
  sol.w = cod.solve(y);
  sol.risk = empirical_risk(model, ds, sol.w);
  sol.converged = true;
  return sol;
}

ReferenceSolution logistic_minimum(const LossModel& model, const Dataset& ds) {
  const Eigen::Index d = model.param_dim();
  const double n = static_cast<double>(ds.size());
  ReferenceSolution sol{Vector::Zero(d), 0.0, false};
  double risk = empirical_risk(model, ds, sol.w);
  for (int it = 0; it < 200; ++it) {
    Vector grad = Vector::Zero(d);
    Matrix hess = Matrix::Zero(d, d);
    for (const auto& s : ds.samples) {
      const double m = s.label * sol.w.dot(s.features);
      const double p = 1.0 / (1.0 + std::exp(m));
      grad -= (s.label * p) * s.features;
      hess.selfadjointView<Eigen::Lower>().rankUpdate(s.features, p * (1.0 - p));
    }
    grad /= n;
    hess = hess.selfadjointView<Eigen::Lower>();
    hess /= n;
    if (grad.norm() <= kReferenceTolerance) {
      sol.converged = true;
      break;
    }
    hess.diagonal().array() += 1e-12;
    const Vector dir = -hess.ldlt().solve(grad);
    double step = 1.0;
    Vector next = sol.w + dir;
    double next_risk = empirical_risk(model, ds, next);
    while (next_risk > risk + 1e-4 * step * grad.dot(dir) && step > 1e-10) {
      step *= 0.5;
      next = sol.w + step * dir;
      next_risk = empirical_risk(model, ds, next);
    }
    if (next_risk >= risk) break;
    sol.w = std::move(next);
    risk = next_risk;
  }
  sol.risk = risk;
  return sol;
}

ReferenceSolution descent_minimum(const LossModel& model, const Dataset& ds) {
  ReferenceSolution sol{Vector::Zero(model.param_dim()), 0.0, false};
  // Nonzero start so networks are not stuck at the symmetric saddle.
  Rng rng(0x5eed);
  sol.w = random_in_ball(model.param_dim(), 0.5, rng);
  double risk = empirical_risk(model, ds, sol.w);
  double step = 1.0;
  for (int it = 0; it < 5000; ++it) {
    const Vector grad = full_gradient(model, ds, sol.w);
    const double gg = grad.squaredNorm();
    if (std::sqrt(gg) <= kReferenceTolerance) {
      sol.converged = true;
      break;
    }
    step = std::min(1.0, step * 2.0);
    Vector next = sol.w - step * grad;
    double next_risk = empirical_risk(model, ds, next);
    while (next_risk > risk - 0.5 * step * gg && step > 1e-12) {
      step *= 0.5;
      next = sol.w - step * grad;
      next_risk = empirical_risk(model, ds, next);
    }
    if (next_risk >= risk) break;
    sol.w = std::move(next);
    risk = next_risk;
  }
  sol.risk = risk;
  return sol;
}

}  // namespace

ReferenceSolution reference_minimum(const LossModel& model, const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("reference_minimum: dataset is empty");
  switch (model.kind()) {
    case ModelKind::LeastSquares: return least_squares_minimum(model, ds);
    case ModelKind::Logistic: return logistic_minimum(model, ds);
    case ModelKind::TinyMLP: return descent_minimum(model, ds);
  }
  return descent_minimum(model, ds);
}

OnAverageEstimate estimate_on_average(const LossModel& model, const DataSource& source,
                                      const OnAverageConfig& cfg) {
  if (cfg.datasets < 1 || cfg.paths < 1) {
    throw std::invalid_argument("estimate_on_average: need at least one dataset and one path");
  }
  const Vector w0 = cfg.w0.size() == 0 ? Vector(Vector::Zero(model.param_dim())) : cfg.w0;
  const Regularizer* reg = cfg.reg ? &*cfg.reg : nullptr;
  CoupledOptions opts;
  opts.trajectory.thin = cfg.thin;
  opts.trajectory.radius = cfg.radius;

  OnAverageEstimate out;
  std::vector<double> nu2s, deltas, fstars;
  std::vector<double> curve_sum(cfg.T + 1, 0.0);
  for (std::size_t i = 0; i < cfg.datasets; ++i) {
    const Dataset ds = source.draw(cfg.n, derive_seed(cfg.seed, SeedStream::Dataset, i));
    const PerturbedPair pair =
        replace_one(ds, source.draw_one(derive_seed(cfg.seed, SeedStream::FreshSample, i)));
    if (!cfg.skip_reference) fstars.push_back(reference_minimum(model, ds).risk);
    for (std::size_t j = 0; j < cfg.paths; ++j) {
      ++out.attempted;
      const SamplePath path =
          draw_path(cfg.n, cfg.T, derive_seed(cfg.seed, SeedStream::Path, i * cfg.paths + j));
      try {
        const CoupledRunResult run = run_coupled(model, pair, cfg.schedule, path, w0, reg, opts);
        if (!run.valid()) {
          ++out.invalid;
          continue;
        }
        deltas.push_back(run.delta.back());
        for (std::size_t t = 0; t < run.delta.size(); ++t) curve_sum[t] += run.delta[t];
        const std::size_t window = std::min(cfg.window, run.s.stored.size());
        nu2s.push_back(estimate_nu2(model, ds, run.s, window).mean);
      } catch (const DivergenceError&) {
        ++out.invalid;
      }
    }
  }
  if (5 * out.invalid > out.attempted) {
    throw std::runtime_error("estimate_on_average: " + std::to_string(out.invalid) + " of " +
                             std::to_string(out.attempted) +
                             " trials were invalid (more than 20%)");
  }
  out.nu2_mean = mean(nu2s);
  out.nu2_stderr = standard_error(nu2s);
  out.stability.mean = mean(deltas);
  out.stability.std_error = standard_error(deltas);
  out.stability.replicas = deltas.size();
  out.stability.mean_curve = curve_sum;
  for (double& v : out.stability.mean_curve) v /= static_cast<double>(deltas.size());
  if (!fstars.empty()) {
    out.f_star_mean = mean(fstars);
    out.f_star_stderr = standard_error(fstars);
  }
  return out;
}

UniformProbe probe_uniform(const LossModel& model, const Regularizer* reg,
                           const UniformProbeConfig& cfg) {
  const Vector w0 = cfg.w0.size() == 0 ? Vector(Vector::Zero(model.param_dim())) : cfg.w0;
  UniformProbe out;
  for (std::size_t a = 0; a < cfg.pairs.size(); ++a) {
    const PerturbedPair& pair = cfg.pairs[a];
    const std::size_t n = pair.base.size();
    const std::uint64_t pair_seed = derive_seed(cfg.seed, SeedStream::Path, a);
    std::vector<double> mean_diff(cfg.probes.size(), 0.0);
    for (std::size_t j = 0; j < cfg.paths; ++j) {
      const SamplePath path = draw_path(n, cfg.T, derive_seed(pair_seed, 0, j));
      const CoupledRunResult run = run_coupled(model, pair, cfg.schedule, path, w0, reg);
      out.max_coupled_delta = std::max(out.max_coupled_delta, run.delta.back());
      for (std::size_t p = 0; p < cfg.probes.size(); ++p) {
        mean_diff[p] += std::abs(model.loss(run.s.final_iterate, cfg.probes[p]) -
                                 model.loss(run.sbar.final_iterate, cfg.probes[p]));
      }

      const std::uint64_t probe_seed = derive_seed(cfg.seed, SeedStream::Probe, a);
      for (std::size_t b = 0; b < cfg.t0_grid.size(); ++b) {
        const std::size_t t0 = cfg.t0_grid[b];
        Rng rng(derive_seed(probe_seed, j, b));
        std::size_t new_index = path[t0];
        if (n > 1) {
          std::uniform_int_distribution<std::size_t> pick(0, n - 2);
          new_index = pick(rng);
          if (new_index >= path[t0]) ++new_index;
        }
        const PathPerturbation pert =
            run_path_perturbed(model, pair.base, reg, cfg.schedule, path, t0, new_index, w0);
        out.max_path_delta = std::max(out.max_path_delta, pert.delta.back());
        for (const auto& z : cfg.probes) {
          out.rho_hat = std::max(out.rho_hat, std::abs(model.loss(pert.final_iterate, z) -
                                                       model.loss(pert.final_perturbed, z)));
          ++out.rho_probes;
        }
      }
    }
    for (double v : mean_diff) {
      out.beta_hat = std::max(out.beta_hat, v / static_cast<double>(cfg.paths));
      ++out.beta_probes;
    }
  }
  return out;
}

GapEstimate generalization_gap(const LossModel& model, const Vector& w, const Dataset& train,
                               const Dataset& held_out) {
  if (held_out.empty()) throw std::invalid_argument("generalization_gap: held-out set is empty");
  GapEstimate g;
  g.train_risk = empirical_risk(model, train, w);
  g.test_risk = empirical_risk(model, held_out, w);
  g.gap = std::abs(g.train_risk - g.test_risk);
  g.held_out_size = held_out.size();
  return g;
}

}  // namespace stablab
