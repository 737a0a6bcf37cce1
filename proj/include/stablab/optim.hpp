#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stablab/data.hpp"
#include "stablab/models.hpp"
#include "stablab/proxreg.hpp"

namespace stablab {

enum class ScheduleKind { SlowLog, Inverse };

std::string to_string(ScheduleKind kind);

/// SlowLog: alpha_t = c / ((t + 2) ln(t + 2)).
/// Inverse: alpha_t = c / (t + 2).
struct StepSchedule {
  ScheduleKind kind = ScheduleKind::Inverse;
  double c = 1.0;

  double operator()(std::size_t t) const;
};

double schedule_eval(const StepSchedule& s, std::size_t t);

/// Indices xi_0 .. xi_{T-1}, i.i.d. uniform on {0, ..., n-1}.
struct SamplePath {
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  std::size_t operator[](std::size_t t) const { return indices[t]; }
};

SamplePath draw_path(std::size_t n, std::size_t T, std::uint64_t seed);

/// Raised when an iterate stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(std::size_t step);
  std::size_t step() const { return step_; }

 private:
  std::size_t step_;
};

struct TrajectoryOptions {
  /// Store every `thin`-th iterate (and the final one).
  std::size_t thin = 10;
  /// Certified parameter ball. A run that leaves it stops and is marked.
  std::optional<double> radius;
  /// Gradient Lipschitz constant; when set, c >= 1/L raises a warning flag.
  std::optional<double> smoothness;
  /// Record f_S(w_t) at the stored iterates (costs one pass over S each).
  bool record_risk = false;
};

struct StepRecord {
  double alpha = 0.0;
  std::size_t index = 0;
  double grad_norm = 0.0;
};

struct Trajectory {
  Vector w0;
  Vector final_iterate;
  std::vector<std::size_t> stored_steps;
  std::vector<Vector> stored;
  std::vector<StepRecord> steps;
  /// f_S at stored iterates when TrajectoryOptions::record_risk is set.
  std::vector<double> risk;
  /// Set when an iterate left the certified ball; the run stops there.
  std::optional<std::size_t> left_ball_at;
  bool step_size_warning = false;

  bool valid() const { return !left_ball_at.has_value(); }
};

/// w_{t+1} = w_t - alpha_t grad l(w_t; z_{xi_t}).
Trajectory run_sgd(const LossModel& model, const Dataset& ds, const StepSchedule& s,
                   const SamplePath& path, const Vector& w0, const TrajectoryOptions& options = {});

/// w_{t+1} = prox(w_t - alpha_t grad l(w_t; z_{xi_t}), alpha_t) with the prox
/// of lambda h.
Trajectory run_prox_sgd(const LossModel& model, const Dataset& ds, const Regularizer& reg,
                        const StepSchedule& s, const SamplePath& path, const Vector& w0,
                        const TrajectoryOptions& options = {});

struct CoupledOptions {
  TrajectoryOptions trajectory;
  /// Record ||grad l(w_{t,S}; z_0)|| and ||grad l(w_{t,S̄}; z_0')|| at every t.
  bool record_replaced_gradients = false;
};

struct CoupledRunResult {
  /// delta_t = ||w_{t,S} - w_{t,S̄}|| for t = 0..T (shorter if a run left the ball).
  std::vector<double> delta;
  /// First t with xi_t equal to the replaced index.
  std::optional<std::size_t> first_hit;
  Trajectory s;
  Trajectory sbar;
  std::vector<double> grad_norm_replaced;
  std::vector<double> grad_norm_replaced_bar;

  bool valid() const { return s.valid() && sbar.valid(); }
};

/// Runs S and S̄ in lockstep from the same w0 with the same schedule and path.
/// `reg` selects proximal SGD when non-null.
CoupledRunResult run_coupled(const LossModel& model, const PerturbedPair& pair,
                             const StepSchedule& s, const SamplePath& path, const Vector& w0,
                             const Regularizer* reg = nullptr, const CoupledOptions& options = {});

struct PathPerturbation {
  /// ||w_{t,xi} - w_{t,xi'}|| for t = 0..T.
  std::vector<double> delta;
  Vector final_iterate;
  Vector final_perturbed;
};

/// Two runs on the same dataset whose paths differ only at step t0, where the
/// second run uses `new_index`.
PathPerturbation run_path_perturbed(const LossModel& model, const Dataset& ds,
                                    const Regularizer* reg, const StepSchedule& s,
                                    const SamplePath& path, std::size_t t0,
                                    std::size_t new_index, const Vector& w0);

}  // namespace stablab
