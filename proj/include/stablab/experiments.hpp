#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stablab/config.hpp"

namespace stablab {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

/// One replica cell of an experiment. Missing measurements are NaN and are
/// written as empty CSV cells.
struct ResultRow {
  std::string kind;
  double sweep = kMissing;
  std::size_t dataset = 0;
  std::size_t path = 0;
  double nu2 = kMissing;
  double delta_T = kMissing;
  double train_risk = kMissing;
  double test_risk = kMissing;
  double gap = kMissing;
  double beta_hat = kMissing;
  double rho_hat = kMissing;
  std::string bound_name;
  double bound_value = kMissing;
  std::string aux_name;
  double aux_value = kMissing;
  /// '|'-separated: invalid, assumptions-violated, estimated, step-size-warning.
  std::string flags;
  std::uint64_t master_seed = 0;
  std::uint64_t config_hash = 0;

  bool has_flag(std::string_view flag) const;
};

struct RunOptions {
  std::size_t workers = 1;
  std::optional<std::uint64_t> seed;
};

struct RunOutput {
  /// Sorted by sweep value, dataset id, path id.
  std::vector<ResultRow> rows;
  /// Experiment-specific summary entries (bound evaluations, suprema).
  nlohmann::json extras = nlohmann::json::object();
};

/// Executes the configured experiment. Replica cells run on `workers`
/// threads; the result does not depend on the worker count.
RunOutput run_config(const ExperimentConfig& cfg, const RunOptions& options = {});

}  // namespace stablab
