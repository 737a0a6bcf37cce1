#include "stablab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "stablab/bounds.hpp"
#include "stablab/estimators.hpp"
#include "stablab/stats.hpp"

namespace stablab {

namespace {

// Runs fn(0..count-1) on up to `workers` threads. The first exception is
// rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(count, 1));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto body = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) out += (out.empty() ? "" : "|") + f;
  return out;
}

class Experiment {
 public:
  Experiment(const ExperimentConfig& cfg, const RunOptions& options) : cfg_(cfg), options_(options) {
    seed_ = options.seed.value_or(cfg.run.seed);
    ExperimentConfig effective = cfg;
    effective.run.seed = seed_;
    hash_ = config_hash(effective);

    if (cfg.data.source == "libsvm") {
      Dataset pool = load_libsvm(cfg.data.path);
      base_ = std::make_shared<PoolSource>(std::move(pool));
    } else {
      base_ = std::make_shared<GaussianSource>(cfg.data.d, cfg.data.margin);
    }
    dim_ = base_->dim();
    model_ = make_model(cfg.model.kind, dim_, cfg.model.hidden);
    if (cfg.model.kind == ModelKind::TinyMLP) {
      Rng rng(derive_seed(seed_, SeedStream::Init, 0));
      w0_ = random_in_ball(model_->param_dim(), 0.5, rng);
    } else {
      w0_ = Vector::Zero(model_->param_dim());
    }
    reference_ = constants(*model_, base_->draw(cfg.data.n, dataset_seed(0)), cfg.model.radius,
                           derive_seed(seed_, SeedStream::Constants, 0));
    schedule_.kind = cfg.schedule.kind;
    schedule_.c = cfg.schedule.c ? *cfg.schedule.c : *cfg.schedule.c_scale / reference_.L;
    const auto& reg = cfg.regularizer;
    if (!reg.lambda_scale.empty()) {
      for (double s : reg.lambda_scale) lambdas_.push_back(s * reference_.L);
    } else {
      lambdas_ = reg.lambda;
    }
    if (cfg.kind == ExperimentKind::BoundsContainment && reg.kind) {
      for (double lambda : lambdas_) {
        if (lambda <= reference_.L) {
          throw std::invalid_argument("regularizer.lambda: the proximal bound needs lambda > L = " +
                                      std::to_string(reference_.L));
        }
      }
    }
  }

  RunOutput run() {
    switch (cfg_.kind) {
      case ExperimentKind::VarianceSweep: return variance_sweep();
      case ExperimentKind::Stability: return stability();
      case ExperimentKind::BoundsContainment: return containment();
      case ExperimentKind::RegSweep: return reg_sweep();
      case ExperimentKind::ProxCheck: return prox_check();
      case ExperimentKind::PathProbe: return path_probe();
    }
    throw std::logic_error("unknown experiment kind");
  }

 private:
  std::uint64_t dataset_seed(std::size_t i) const { return derive_seed(seed_, SeedStream::Dataset, i); }
  std::uint64_t held_out_seed(std::size_t i) const { return derive_seed(seed_, SeedStream::HeldOut, i); }
  std::uint64_t fresh_seed(std::size_t i) const { return derive_seed(seed_, SeedStream::FreshSample, i); }
  std::uint64_t path_seed(std::size_t i, std::size_t j) const {
    return derive_seed(seed_, SeedStream::Path, i * cfg_.run.paths + j);
  }

  std::shared_ptr<const DataSource> source(double p) const {
    if (p == 0.0) return base_;
    return std::make_shared<NoisySource>(base_, p, cfg_.data.labels);
  }

  Regularizer regularizer(double lambda) const {
    const auto& spec = cfg_.regularizer;
    switch (*spec.kind) {
      case RegKind::Ridge: return Regularizer::ridge(lambda);
      case RegKind::ElasticNet: return Regularizer::elastic_net(spec.mu, lambda);
      case RegKind::Tikhonov: {
        Vector diag = Eigen::Map<const Vector>(spec.gamma_diag.data(),
                                               static_cast<Eigen::Index>(spec.gamma_diag.size()));
        return Regularizer::tikhonov(diag.asDiagonal().toDenseMatrix(), lambda);
      }
    }
    throw std::logic_error("unknown regularizer");
  }

  std::optional<Regularizer> first_regularizer() const {
    if (!cfg_.regularizer.kind || lambdas_.empty()) return std::nullopt;
    return regularizer(lambdas_.front());
  }

  TrajectoryOptions trajectory_options() const {
    TrajectoryOptions o;
    o.thin = cfg_.run.thin;
    o.radius = cfg_.model.radius;
    o.smoothness = reference_.L;
    return o;
  }

  ResultRow row(double sweep, std::size_t i, std::size_t j) const {
    ResultRow r;
    r.kind = to_string(cfg_.kind);
    r.sweep = sweep;
    r.dataset = i;
    r.path = j;
    r.master_seed = seed_;
    r.config_hash = hash_;
    return r;
  }

  std::vector<std::string> base_flags(const Trajectory& traj) const {
    std::vector<std::string> flags;
    if (reference_.estimated) flags.push_back("estimated");
    if (traj.step_size_warning) flags.push_back("step-size-warning");
    return flags;
  }

  // Runs SGD (or proximal SGD) and fills the shared measurement columns.
  ResultRow measured_run(double sweep, std::size_t i, std::size_t j, const Dataset& ds,
                         const Dataset& held, const Regularizer* reg) const {
    ResultRow r = row(sweep, i, j);
    const SamplePath path = draw_path(ds.size(), cfg_.run.T, path_seed(i, j));
    try {
      const Trajectory traj =
          reg ? run_prox_sgd(*model_, ds, *reg, schedule_, path, w0_, trajectory_options())
              : run_sgd(*model_, ds, schedule_, path, w0_, trajectory_options());
      auto flags = base_flags(traj);
      if (!traj.valid()) {
        flags.push_back("invalid");
        r.aux_name = "left_ball_at";
        r.aux_value = static_cast<double>(*traj.left_ball_at);
      } else {
        r.nu2 = estimate_nu2(*model_, ds, traj, cfg_.run.window).mean;
        const GapEstimate gap = generalization_gap(*model_, traj.final_iterate, ds, held);
        r.train_risk = gap.train_risk;
        r.test_risk = gap.test_risk;
        r.gap = gap.gap;
      }
      r.flags = join_flags(flags);
    } catch (const DivergenceError& e) {
      r.flags = "invalid";
      r.aux_name = "diverged_at";
      r.aux_value = static_cast<double>(e.step());
    }
    return r;
  }

  template <typename Task>
  std::vector<ResultRow> run_cells(std::size_t cells, Task&& task) const {
    std::vector<std::vector<ResultRow>> slots(cells);
    parallel_for(cells, options_.workers, [&](std::size_t c) { slots[c] = task(c); });
    std::vector<ResultRow> rows;
    for (auto& s : slots) {
      for (auto& r : s) rows.push_back(std::move(r));
    }
    return rows;
  }

  RunOutput variance_sweep() const {
    const auto& noise = cfg_.data.noise;
    const std::size_t m = cfg_.run.datasets;
    RunOutput out;
    out.rows = run_cells(noise.size() * m, [&](std::size_t cell) {
      const double p = noise[cell / m];
      const std::size_t i = cell % m;
      const auto src = source(p);
      const Dataset ds = src->draw(cfg_.data.n, dataset_seed(i));
      const Dataset held = src->draw(cfg_.data.held_out, held_out_seed(i));
      std::vector<ResultRow> rows;
      for (std::size_t j = 0; j < cfg_.run.paths; ++j) {
        rows.push_back(measured_run(p, i, j, ds, held, nullptr));
      }
      return rows;
    });
    out.extras["schedule_c"] = schedule_.c;
    out.extras["L"] = reference_.L;
    return out;
  }

  BoundInputs bound_inputs(const Constants& k) const {
    BoundInputs in;
    in.n = cfg_.data.n;
    in.T = cfg_.run.T;
    in.confidence = cfg_.run.confidence;
    in.M = k.M;
    in.sigma = k.sigma;
    in.L = k.L;
    in.c = schedule_.c;
    in.estimated_constants = k.estimated;
    return in;
  }

  RunOutput stability() const {
    const auto& noise = cfg_.data.noise;
    const std::size_t m = cfg_.run.datasets;
    const auto reg = first_regularizer();
    std::vector<double> f0(noise.size() * m, 0.0);
    RunOutput out;
    out.rows = run_cells(noise.size() * m, [&](std::size_t cell) {
      const double p = noise[cell / m];
      const std::size_t i = cell % m;
      const auto src = source(p);
      const Dataset ds = src->draw(cfg_.data.n, dataset_seed(i));
      const Dataset held = src->draw(cfg_.data.held_out, held_out_seed(i));
      f0[cell] = empirical_risk(*model_, held, w0_) + (reg ? reg->lambda() * reg->value(w0_) : 0.0);
      const PerturbedPair pair = replace_one(ds, src->draw_one(fresh_seed(i)));
      CoupledOptions opts;
      opts.trajectory = trajectory_options();
      std::vector<ResultRow> rows;
      for (std::size_t j = 0; j < cfg_.run.paths; ++j) {
        ResultRow r = row(p, i, j);
        const SamplePath path = draw_path(ds.size(), cfg_.run.T, path_seed(i, j));
        try {
          const CoupledRunResult run =
              run_coupled(*model_, pair, schedule_, path, w0_, reg ? &*reg : nullptr, opts);
          auto flags = base_flags(run.s);
          if (!run.valid()) {
            flags.push_back("invalid");
          } else {
            r.delta_T = run.delta.back();
            r.nu2 = estimate_nu2(*model_, ds, run.s, cfg_.run.window).mean;
            const GapEstimate gap = generalization_gap(*model_, run.s.final_iterate, ds, held);
            r.train_risk = gap.train_risk;
            r.test_risk = gap.test_risk;
            r.gap = gap.gap;
          }
          if (run.first_hit) {
            r.aux_name = "first_hit";
            r.aux_value = static_cast<double>(*run.first_hit);
          }
          r.flags = join_flags(flags);
        } catch (const DivergenceError&) {
          r.flags = "invalid";
        }
        rows.push_back(std::move(r));
      }
      return rows;
    });

    nlohmann::json bounds = nlohmann::json::array();
    for (std::size_t a = 0; a < noise.size(); ++a) {
      std::vector<double> deltas, nu2s;
      for (const auto& r : out.rows) {
        if (r.sweep != noise[a] || r.has_flag("invalid")) continue;
        deltas.push_back(r.delta_T);
        nu2s.push_back(r.nu2);
      }
      if (deltas.empty()) continue;
      BoundInputs in = bound_inputs(reference_);
      in.f0 = mean(std::span<const double>(f0).subspan(a * m, m));
      in.nu2 = mean(nu2s);
      in.delta_mean = mean(deltas);
      nlohmann::json entry{{"sweep", noise[a]},
                           {"delta_mean", *in.delta_mean},
                           {"nu2_mean", in.nu2},
                           {"f0", in.f0},
                           {"prop1", prop1_ms(in).value}};
      try {
        if (reg) {
          in.lambda = reg->lambda();
          in.phi0 = in.f0;
          entry["thm4"] = thm4(in).value;
        } else {
          entry["thm1"] = thm1(in).value;
        }
      } catch (const BoundDomainError& e) {
        entry["bound_error"] = e.what();
      }
      bounds.push_back(std::move(entry));
    }
    out.extras["bounds"] = std::move(bounds);
    out.extras["constants"] = {{"L", reference_.L}, {"sigma", reference_.sigma}, {"M", reference_.M}};
    return out;
  }

  RunOutput containment() const {
    const std::size_t m = cfg_.run.datasets;
    const double p = cfg_.data.noise.empty() ? 0.0 : cfg_.data.noise.front();
    const auto reg = first_regularizer();
    std::vector<Constants> consts(m);
    std::vector<double> f0(m, 0.0);
    RunOutput out;
    out.rows = run_cells(m, [&](std::size_t i) {
      const auto src = source(p);
      const Dataset ds = src->draw(cfg_.data.n, dataset_seed(i));
      const Dataset held = src->draw(cfg_.data.held_out, held_out_seed(i));
      consts[i] = constants(*model_, ds, cfg_.model.radius, derive_seed(seed_, SeedStream::Constants, i));
      f0[i] = empirical_risk(*model_, held, w0_);
      std::vector<ResultRow> rows;
      for (std::size_t j = 0; j < cfg_.run.paths; ++j) {
        rows.push_back(measured_run(p, i, j, ds, held, reg ? &*reg : nullptr));
      }
      return rows;
    });

    std::vector<double> nu2s;
    for (const auto& r : out.rows) {
      if (!r.has_flag("invalid")) nu2s.push_back(r.nu2);
    }
    const double nu2 = nu2s.empty() ? 0.0 : mean(nu2s);
    const double f0_mean = mean(f0);
    for (auto& r : out.rows) {
      if (r.has_flag("invalid")) continue;
      BoundInputs in = bound_inputs(consts[r.dataset]);
      in.f0 = f0_mean;
      in.nu2 = nu2;
      std::vector<std::string> flags;
      if (!r.flags.empty()) flags.push_back(r.flags);
      try {
        BoundReport rep;
        if (reg) {
          in.lambda = reg->lambda();
          in.phi0 = f0_mean + reg->lambda() * reg->value(w0_);
          rep = thm4(in);
        } else {
          rep = thm1(in);
        }
        r.bound_name = rep.name;
        r.bound_value = rep.value;
        if (rep.assumptions_violated) flags.push_back("assumptions-violated");
        if (rep.estimated && !r.has_flag("estimated")) flags.push_back("estimated");
      } catch (const BoundDomainError&) {
        flags.push_back("assumptions-violated");
      }
      r.flags = join_flags(flags);
    }
    out.extras["nu2_mean"] = nu2;
    out.extras["f0"] = f0_mean;
    out.extras["schedule_c"] = schedule_.c;
    if (reg) out.extras["lambda"] = reg->lambda();
    return out;
  }

  RunOutput reg_sweep() const {
    const std::size_t m = cfg_.run.datasets;
    const double p = cfg_.data.noise.empty() ? 0.0 : cfg_.data.noise.front();
    RunOutput out;
    out.rows = run_cells(lambdas_.size() * m, [&](std::size_t cell) {
      const double lambda = lambdas_[cell / m];
      const std::size_t i = cell % m;
      const auto src = source(p);
      const Dataset ds = src->draw(cfg_.data.n, dataset_seed(i));
      const Dataset held = src->draw(cfg_.data.held_out, held_out_seed(i));
      const Regularizer reg = regularizer(lambda);
      std::vector<ResultRow> rows;
      for (std::size_t j = 0; j < cfg_.run.paths; ++j) {
        rows.push_back(measured_run(lambda, i, j, ds, held, &reg));
      }
      return rows;
    });
    out.extras["L"] = reference_.L;
    out.extras["schedule_c"] = schedule_.c;
    return out;
  }

  RunOutput prox_check() const {
    const Eigen::Index d = dim_;
    const std::size_t trials = cfg_.run.probes;
    RunOutput out;
    out.rows = run_cells(lambdas_.size(), [&](std::size_t a) {
      const Regularizer reg = regularizer(lambdas_[a]);
      Rng rng(derive_seed(seed_, SeedStream::Probe, a));
      std::normal_distribution<double> normal(0.0, 1.0);
      std::uniform_real_distribution<double> step(0.01, 2.0);
      auto draw = [&] {
        Vector v(d);
        for (Eigen::Index k = 0; k < d; ++k) v[k] = 2.0 * normal(rng);
        return v;
      };
      double contraction = -std::numeric_limits<double>::infinity();
      double nonexpansive = -std::numeric_limits<double>::infinity();
      double residual = 0.0;
      for (std::size_t t = 0; t < trials; ++t) {
        const Vector w = draw(), v = draw(), g1 = draw(), g2 = draw();
        const double alpha = step(rng);
        contraction = std::max(contraction, (reg.prox(w, alpha) - reg.prox(v, alpha)).norm() -
                                                (w - v).norm() / (1.0 + alpha * reg.lambda()));
        nonexpansive = std::max(nonexpansive, (gradient_map(reg, {w, g1, alpha}) -
                                               gradient_map(reg, {w, g2, alpha}))
                                                      .norm() -
                                                  (g1 - g2).norm());
        if (t < 1000) residual = std::max(residual, prox_oracle_check(reg, w, alpha).residual);
      }
      std::vector<ResultRow> rows;
      for (auto [name, value] : {std::pair{"contraction_margin", contraction},
                                 std::pair{"nonexpansive_margin", nonexpansive},
                                 std::pair{"oracle_residual", residual}}) {
        ResultRow r = row(reg.lambda(), 0, rows.size());
        r.aux_name = name;
        r.aux_value = value;
        rows.push_back(std::move(r));
      }
      return rows;
    });
    return out;
  }

  RunOutput path_probe() const {
    std::vector<std::size_t> horizons = cfg_.run.horizons;
    if (horizons.empty()) horizons.push_back(cfg_.run.T);
    const std::size_t m = cfg_.run.datasets;
    const double p = cfg_.data.noise.empty() ? 0.0 : cfg_.data.noise.front();
    const Regularizer reg = *first_regularizer();
    RunOutput out;
    out.rows = run_cells(horizons.size() * m, [&](std::size_t cell) {
      const std::size_t T = horizons[cell / m];
      const std::size_t i = cell % m;
      const std::size_t t0 = static_cast<std::size_t>(cfg_.run.t0_fraction * static_cast<double>(T));
      const auto src = source(p);
      const Dataset ds = src->draw(cfg_.data.n, dataset_seed(i));
      const Dataset probes = src->draw(cfg_.run.probes, held_out_seed(i));
      const PerturbedPair pair = replace_one(ds, src->draw_one(fresh_seed(i)));
      std::vector<double> coupled_diff(probes.size(), 0.0);
      std::vector<ResultRow> rows;
      for (std::size_t j = 0; j < cfg_.run.paths; ++j) {
        ResultRow r = row(static_cast<double>(T), i, j);
        const SamplePath path = draw_path(ds.size(), T, path_seed(i, j));
        const CoupledRunResult coupled = run_coupled(*model_, pair, schedule_, path, w0_, &reg);
        for (std::size_t z = 0; z < probes.size(); ++z) {
          coupled_diff[z] += std::abs(model_->loss(coupled.s.final_iterate, probes[z]) -
                                      model_->loss(coupled.sbar.final_iterate, probes[z]));
        }
        Rng rng(derive_seed(derive_seed(seed_, SeedStream::Probe, i), j, 0));
        std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 2);
        std::size_t new_index = pick(rng);
        if (new_index >= path[t0]) ++new_index;
        const PathPerturbation pert =
            run_path_perturbed(*model_, ds, &reg, schedule_, path, t0, new_index, w0_);
        double rho = 0.0;
        for (const auto& z : probes.samples) {
          rho = std::max(rho, std::abs(model_->loss(pert.final_iterate, z) -
                                       model_->loss(pert.final_perturbed, z)));
        }
        std::vector<double> ts, ds_;
        for (std::size_t t = std::max<std::size_t>(2 * t0, 1); t <= T; ++t) {
          ts.push_back(static_cast<double>(t));
          ds_.push_back(pert.delta[t]);
        }
        r.rho_hat = rho;
        r.delta_T = pert.delta.back();
        r.aux_name = "loglog_slope";
        r.aux_value = loglog_slope(ts, ds_);
        if (reference_.estimated) r.flags = "estimated";
        rows.push_back(std::move(r));
      }
      double beta = 0.0;
      for (double v : coupled_diff) beta = std::max(beta, v / static_cast<double>(cfg_.run.paths));
      for (auto& r : rows) r.beta_hat = beta;
      return rows;
    });

    nlohmann::json per_horizon = nlohmann::json::array();
    for (std::size_t T : horizons) {
      double beta = 0.0, rho = 0.0;
      for (const auto& r : out.rows) {
        if (r.sweep != static_cast<double>(T)) continue;
        beta = std::max(beta, r.beta_hat);
        rho = std::max(rho, r.rho_hat);
      }
      BoundInputs in = bound_inputs(reference_);
      in.T = T;
      in.beta = beta;
      in.rho = rho;
      in.lambda = reg.lambda();
      nlohmann::json entry{{"T", T}, {"beta_hat", beta}, {"rho_hat", rho},
                           {"lemma_uniform", lemma_uniform(in).value}};
      try {
        entry["thm5"] = thm5(in).value;
      } catch (const BoundDomainError& e) {
        entry["thm5_error"] = e.what();
      }
      per_horizon.push_back(std::move(entry));
    }
    out.extras["horizons"] = std::move(per_horizon);
    out.extras["decay_rate"] = schedule_.c * (reg.lambda() - reference_.L);
    return out;
  }

  const ExperimentConfig& cfg_;
  RunOptions options_;
  std::uint64_t seed_ = 0;
  std::uint64_t hash_ = 0;
  std::shared_ptr<const DataSource> base_;
  Eigen::Index dim_ = 0;
  std::unique_ptr<LossModel> model_;
  Vector w0_;
  Constants reference_;
  StepSchedule schedule_;
  std::vector<double> lambdas_;
};

}  // namespace

RunOutput run_config(const ExperimentConfig& cfg, const RunOptions& options) {
  Experiment exp(cfg, options);
  RunOutput out = exp.run();
  std::stable_sort(out.rows.begin(), out.rows.end(), [](const ResultRow& a, const ResultRow& b) {
    if (a.sweep != b.sweep) return a.sweep < b.sweep;
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    return a.path < b.path;
  });
  return out;
}

}  // namespace stablab
