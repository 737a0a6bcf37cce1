#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stablab/models.hpp"
#include "stablab/optim.hpp"
#include "stablab/proxreg.hpp"

namespace stablab {

enum class ExperimentKind { VarianceSweep, Stability, BoundsContainment, RegSweep, ProxCheck, PathProbe };

std::string to_string(ExperimentKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::Logistic;
  std::vector<Eigen::Index> hidden{8};
  /// Certified parameter ball; runs leaving it are invalid.
  double radius = 50.0;
};

struct DataSpec {
  std::string source = "gaussian";  // gaussian | libsvm
  std::string path;
  std::size_t n = 200;
  Eigen::Index d = 10;
  double margin = 2.0;
  std::size_t held_out = 2000;
  std::vector<double> noise{0.0};
  std::vector<double> labels{-1.0, 1.0};
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::SlowLog;
  /// Exactly one of c and c_scale is set after validation; c_scale means c = c_scale / L.
  std::optional<double> c;
  std::optional<double> c_scale;
};

struct RegularizerSpec {
  std::optional<RegKind> kind;
  /// Absolute weights, or multiples of L in lambda_scale.
  std::vector<double> lambda;
  std::vector<double> lambda_scale;
  double mu = 0.0;
  std::vector<double> gamma_diag;
};

struct RunSpec {
  std::size_t T = 2000;
  std::size_t datasets = 5;
  std::size_t paths = 4;
  std::uint64_t seed = 1;
  std::size_t window = 50;
  std::size_t thin = 10;
  double confidence = 0.1;
  double t0_fraction = 0.1;
  std::vector<std::size_t> horizons;
  std::size_t probes = 100;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::VarianceSweep;
  ModelSpec model;
  DataSpec data;
  ScheduleSpec schedule;
  RegularizerSpec regularizer;
  RunSpec run;
};

struct ValidationResult {
  std::optional<ExperimentConfig> config;
  /// One entry per violation, each starting with its key path (e.g. "run.T: ...").
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return config.has_value(); }
};

/// Parses the INI-style config:
///
///   [experiment]   kind
///   [model]        kind, hidden, radius
///   [data]         source, path, n, d, margin, held_out, noise, labels
///   [schedule]     kind, c | c_scale
///   [regularizer]  kind, lambda | lambda_scale, mu, gamma_diag
///   [run]          T, datasets, paths, seed, window, thin, confidence,
///                  t0_fraction, horizons, probes
///
/// Lists are comma separated; `#` starts a comment. Unknown sections and
/// keys are errors. No config is returned if anything fails.
ValidationResult validate_config(std::string_view text);

/// Canonical text form with every field, defaults included. Parsing it
/// yields the same config.
std::string canonical_text(const ExperimentConfig& cfg);

/// FNV-1a 64 of canonical_text.
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace stablab
