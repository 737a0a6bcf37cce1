#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "json.hpp"
#include "stablab/experiments.hpp"

namespace stablab {

/// Column order of the results CSV, preceded by a `# stability-lab results v1` line.
const std::vector<std::string>& csv_columns();

void write_csv(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_csv(std::istream& in);

/// Per-sweep-value means and standard errors of every measured column over
/// valid rows, Spearman trends of those means against the sweep value, and
/// the bound-containment frequency over assumption-compliant rows.
nlohmann::json summarize(std::span<const ResultRow> rows,
                         const nlohmann::json& extras = nlohmann::json::object());

struct EmittedFiles {
  std::filesystem::path csv;
  std::filesystem::path json;
};

/// Writes results.csv and summary.json into `dir` (created if needed).
EmittedFiles emit(std::span<const ResultRow> rows, const nlohmann::json& summary,
                  const std::filesystem::path& dir);

}  // namespace stablab
