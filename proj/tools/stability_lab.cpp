#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "stablab/config.hpp"
#include "stablab/emit.hpp"
#include "stablab/experiments.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kRunError = 3;

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Loads and validates; prints diagnostics. Returns nullopt on any error.
std::optional<stablab::ExperimentConfig> load(const std::string& path) {
  const auto text = read_file(path);
  if (!text) {
    std::cerr << "error: cannot read config " << path << "\n";
    return std::nullopt;
  }
  const auto result = stablab::validate_config(*text);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : result.errors) std::cerr << "error: " << e << "\n";
  return result.config;
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stability-lab: SGD stability and generalization experiments"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = env("STABILITY_LAB_OUT").value_or("results");
  std::size_t workers = 1;
  if (auto w = env("STABILITY_LAB_WORKERS")) {
    try {
      workers = std::stoul(*w);
    } catch (const std::exception&) {
      std::cerr << "error: STABILITY_LAB_WORKERS must be a positive integer, got " << *w << "\n";
      return kConfigError;
    }
  }
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "Run an experiment and write results.csv and summary.json");
  run->add_option("config", config_path, "Experiment config file")->required();
  run->add_option("--out", out_dir, "Output directory (env STABILITY_LAB_OUT)");
  run->add_option("--workers", workers, "Worker threads (env STABILITY_LAB_WORKERS)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the master seed");

  auto* validate = app.add_subcommand("validate", "Check a config and print its canonical form");
  validate->add_option("config", config_path, "Experiment config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (workers == 0) {
    std::cerr << "error: workers must be positive\n";
    return kConfigError;
  }

  const auto cfg = load(config_path);
  if (!cfg) return kConfigError;

  if (*validate) {
    std::cout << stablab::canonical_text(*cfg);
    return 0;
  }

  try {
    stablab::RunOptions options;
    options.workers = workers;
    options.seed = seed;
    const auto output = stablab::run_config(*cfg, options);
    if (output.rows.empty()) {
      std::cerr << "error: experiment produced no rows\n";
      return kRunError;
    }
    const auto summary = stablab::summarize(output.rows, output.extras);
    const auto files = stablab::emit(output.rows, summary, out_dir);
    std::cout << files.csv.string() << "\n" << files.json.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunError;
  }
  return 0;
}
