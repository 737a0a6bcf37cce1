#include "stablab/optim.hpp"

#include <cmath>

namespace stablab {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::SlowLog ? "slowlog" : "inverse";
}

double StepSchedule::operator()(std::size_t t) const {
  const double k = static_cast<double>(t) + 2.0;
  return kind == ScheduleKind::SlowLog ? c / (k * std::log(k)) : c / k;
}

double schedule_eval(const StepSchedule& s, std::size_t t) { return s(t); }

SamplePath draw_path(std::size_t n, std::size_t T, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("draw_path: n must be at least 1");
  if (T < 1) throw std::invalid_argument("draw_path: T must be at least 1");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  SamplePath path{seed, n, {}};
  path.indices.resize(T);
  for (auto& i : path.indices) i = pick(rng);
  return path;
}

DivergenceError::DivergenceError(std::size_t step)
    : std::runtime_error("iterate became non-finite at step " + std::to_string(step)),
      step_(step) {}

namespace {

void check_inputs(const LossModel& model, const Dataset& ds, const SamplePath& path,
                  const Vector& w0) {
  if (ds.empty()) throw std::invalid_argument("optimizer: dataset is empty");
  if (path.n != ds.size()) {
    throw std::invalid_argument("optimizer: sample path was drawn for n=" + std::to_string(path.n) +
                                " but the dataset has n=" + std::to_string(ds.size()));
  }
  if (w0.size() != model.param_dim()) throw DimensionError("optimizer: w0 has wrong dimension");
}

// One SGD or proximal-SGD update in place. Returns ||g||.
struct Stepper {
  const LossModel& model;
  const Regularizer* reg;
  const StepSchedule& schedule;
  Vector grad;

  double advance(Vector& w, std::size_t t, const Sample& z) {
    model.grad_into(w, z, grad);
    const double alpha = schedule(t);
    w.noalias() -= alpha * grad;
    if (reg != nullptr) w = reg->prox(w, alpha);
    if (!w.allFinite()) throw DivergenceError(t);
    return grad.norm();
  }
};

class Recorder {
 public:
  Recorder(const LossModel& model, const Dataset& ds, const StepSchedule& s,
           const TrajectoryOptions& options, const Vector& w0, std::size_t T)
      : model_(model), ds_(ds), options_(options), T_(T) {
    traj_.w0 = w0;
    traj_.steps.reserve(T);
    if (options.smoothness && s.c * *options.smoothness >= 1.0) traj_.step_size_warning = true;
    store(0, w0);
  }

  // Returns false once the iterate leaves the certified ball.
  bool after_step(std::size_t t, std::size_t index, double alpha, double grad_norm,
                  const Vector& w) {
    traj_.steps.push_back(StepRecord{alpha, index, grad_norm});
    const std::size_t next = t + 1;
    if (options_.radius && w.norm() > *options_.radius) {
      traj_.left_ball_at = next;
      store(next, w);
      return false;
    }
    const std::size_t thin = options_.thin == 0 ? 1 : options_.thin;
    if (next % thin == 0 || next == T_) store(next, w);
    return true;
  }

  Trajectory finish(const Vector& w) {
    traj_.final_iterate = w;
    return std::move(traj_);
  }

 private:
  void store(std::size_t t, const Vector& w) {
    traj_.stored_steps.push_back(t);
    traj_.stored.push_back(w);
    if (options_.record_risk) traj_.risk.push_back(empirical_risk(model_, ds_, w));
  }

  const LossModel& model_;
  const Dataset& ds_;
  const TrajectoryOptions& options_;
  std::size_t T_;
  Trajectory traj_;
};

Trajectory run(const LossModel& model, const Dataset& ds, const Regularizer* reg,
               const StepSchedule& s, const SamplePath& path, const Vector& w0,
               const TrajectoryOptions& options) {
  check_inputs(model, ds, path, w0);
  Stepper stepper{model, reg, s, {}};
  Recorder rec(model, ds, s, options, w0, path.size());
  Vector w = w0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    const double gnorm = stepper.advance(w, t, ds[path[t]]);
    if (!rec.after_step(t, path[t], s(t), gnorm, w)) break;
  }
  return rec.finish(w);
}

}  // namespace

Trajectory run_sgd(const LossModel& model, const Dataset& ds, const StepSchedule& s,
                   const SamplePath& path, const Vector& w0, const TrajectoryOptions& options) {
  return run(model, ds, nullptr, s, path, w0, options);
}

Trajectory run_prox_sgd(const LossModel& model, const Dataset& ds, const Regularizer& reg,
                        const StepSchedule& s, const SamplePath& path, const Vector& w0,
                        const TrajectoryOptions& options) {
  return run(model, ds, &reg, s, path, w0, options);
}

CoupledRunResult run_coupled(const LossModel& model, const PerturbedPair& pair,
                             const StepSchedule& s, const SamplePath& path, const Vector& w0,
                             const Regularizer* reg, const CoupledOptions& options) {
  check_inputs(model, pair.base, path, w0);
  check_inputs(model, pair.replaced, path, w0);
  const std::size_t T = path.size();
  Stepper step_s{model, reg, s, {}};
  Stepper step_sbar{model, reg, s, {}};
  Recorder rec_s(model, pair.base, s, options.trajectory, w0, T);
  Recorder rec_sbar(model, pair.replaced, s, options.trajectory, w0, T);

  CoupledRunResult out;
  out.delta.reserve(T + 1);
  out.delta.push_back(0.0);
  const Sample& z0 = pair.base[pair.replaced_index];
  const Sample& z0bar = pair.replaced[pair.replaced_index];
  Vector w = w0, wbar = w0, g;
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t idx = path[t];
    if (idx == pair.replaced_index && !out.first_hit) out.first_hit = t;
    if (options.record_replaced_gradients) {
      model.grad_into(w, z0, g);
      out.grad_norm_replaced.push_back(g.norm());
      model.grad_into(wbar, z0bar, g);
      out.grad_norm_replaced_bar.push_back(g.norm());
    }
    const double gn = step_s.advance(w, t, pair.base[idx]);
    const double gnbar = step_sbar.advance(wbar, t, pair.replaced[idx]);
    out.delta.push_back((w - wbar).norm());
    const bool in_s = rec_s.after_step(t, idx, s(t), gn, w);
    const bool in_sbar = rec_sbar.after_step(t, idx, s(t), gnbar, wbar);
    if (!in_s || !in_sbar) break;
  }
  out.s = rec_s.finish(w);
  out.sbar = rec_sbar.finish(wbar);
  return out;
}

PathPerturbation run_path_perturbed(const LossModel& model, const Dataset& ds,
                                    const Regularizer* reg, const StepSchedule& s,
                                    const SamplePath& path, std::size_t t0,
                                    std::size_t new_index, const Vector& w0) {
  check_inputs(model, ds, path, w0);
  if (t0 >= path.size()) throw std::invalid_argument("run_path_perturbed: t0 must be below T");
  if (new_index >= ds.size()) throw std::invalid_argument("run_path_perturbed: index out of range");
  Stepper a{model, reg, s, {}};
  Stepper b{model, reg, s, {}};
  PathPerturbation out;
  out.delta.reserve(path.size() + 1);
  out.delta.push_back(0.0);
  Vector w = w0, wbar = w0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    a.advance(w, t, ds[path[t]]);
    b.advance(wbar, t, ds[t == t0 ? new_index : path[t]]);
    out.delta.push_back((w - wbar).norm());
  }
  out.final_iterate = std::move(w);
  out.final_perturbed = std::move(wbar);
  return out;
}

}  // namespace stablab
