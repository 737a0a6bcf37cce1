#include "stablab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

namespace stablab {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::VarianceSweep: return "variance-sweep";
    case ExperimentKind::Stability: return "stability";
    case ExperimentKind::BoundsContainment: return "bounds-containment";
    case ExperimentKind::RegSweep: return "reg-sweep";
    case ExperimentKind::ProxCheck: return "prox-check";
    case ExperimentKind::PathProbe: return "path-probe";
  }
  return "unknown";
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"experiment", {"kind"}},
      {"model", {"kind", "hidden", "radius"}},
      {"data", {"source", "path", "n", "d", "margin", "held_out", "noise", "labels"}},
      {"schedule", {"kind", "c", "c_scale"}},
      {"regularizer", {"kind", "lambda", "lambda_scale", "mu", "gamma_diag"}},
      {"run",
       {"T", "datasets", "paths", "seed", "window", "thin", "confidence", "t0_fraction",
        "horizons", "probes"}},
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) out.push_back(trim(item));
  if (!v.empty() && v.back() == ',') out.push_back({});
  return out;
}

class Reader {
 public:
  explicit Reader(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  std::vector<std::string> errors;

  const std::string* raw(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  void error(const std::string& key, const std::string& what) { errors.push_back(key + ": " + what); }

  template <typename T>
  bool number(const std::string& key, const std::string& text, T& out) {
    std::string_view s(text);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out);
    if (s.empty() || ec != std::errc() || ptr != end) {
      error(key, "'" + text + "' is not a valid " +
                     (std::is_integral_v<T> ? std::string("nonnegative integer")
                                            : std::string("number")));
      return false;
    }
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(out)) {
        error(key, "must be finite");
        return false;
      }
    }
    return true;
  }

  void count(const std::string& key, std::size_t& field, std::size_t min_value) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    if (!v->empty() && v->front() == '-') {
      error(key, "must be a positive integer, got " + *v);
      return;
    }
    std::uint64_t parsed = 0;
    if (!number(key, *v, parsed)) return;
    if (parsed < min_value) {
      error(key, "must be at least " + std::to_string(min_value));
      return;
    }
    field = static_cast<std::size_t>(parsed);
  }

  void seed(const std::string& key, std::uint64_t& field) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    std::uint64_t parsed = 0;
    if (number(key, *v, parsed)) field = parsed;
  }

  void real(const std::string& key, double& field) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    double parsed = 0.0;
    if (number(key, *v, parsed)) field = parsed;
  }

  void real(const std::string& key, std::optional<double>& field) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    double parsed = 0.0;
    if (number(key, *v, parsed)) field = parsed;
  }

  template <typename T>
  void list(const std::string& key, std::vector<T>& field) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    std::vector<T> parsed;
    if (trim(*v).empty()) {
      field.clear();
      return;
    }
    for (const auto& item : split_list(*v)) {
      T x{};
      if constexpr (std::is_integral_v<T>) {
        if (!item.empty() && item.front() == '-') {
          error(key, "entries must be nonnegative integers, got " + item);
          return;
        }
      }
      if (!number(key, item, x)) return;
      parsed.push_back(x);
    }
    field = std::move(parsed);
  }

  template <typename E>
  void choice(const std::string& key, const std::vector<std::pair<std::string, E>>& options,
              E& field) {
    const auto* v = raw(key);
    if (v == nullptr) return;
    for (const auto& [name, value] : options) {
      if (*v == name) {
        field = value;
        return;
      }
    }
    std::string names;
    for (const auto& [name, value] : options) names += (names.empty() ? "" : ", ") + name;
    error(key, "unknown value '" + *v + "' (expected one of: " + names + ")");
  }

 private:
  std::map<std::string, std::string> values_;
};

const std::vector<std::pair<std::string, ExperimentKind>> kExperimentKinds{
    {"variance-sweep", ExperimentKind::VarianceSweep},
    {"stability", ExperimentKind::Stability},
    {"bounds-containment", ExperimentKind::BoundsContainment},
    {"reg-sweep", ExperimentKind::RegSweep},
    {"prox-check", ExperimentKind::ProxCheck},
    {"path-probe", ExperimentKind::PathProbe},
};

const std::vector<std::pair<std::string, ModelKind>> kModelKinds{
    {"logistic", ModelKind::Logistic},
    {"least-squares", ModelKind::LeastSquares},
    {"tiny-mlp", ModelKind::TinyMLP},
};

const std::vector<std::pair<std::string, ScheduleKind>> kScheduleKinds{
    {"slowlog", ScheduleKind::SlowLog},
    {"inverse", ScheduleKind::Inverse},
};

const std::vector<std::pair<std::string, std::optional<RegKind>>> kRegKinds{
    {"none", std::nullopt},
    {"ridge", RegKind::Ridge},
    {"tikhonov", RegKind::Tikhonov},
    {"elastic-net", RegKind::ElasticNet},
};

const std::vector<std::pair<std::string, std::string>> kSources{
    {"gaussian", "gaussian"},
    {"libsvm", "libsvm"},
};

bool uses_variance(ExperimentKind k) {
  return k == ExperimentKind::VarianceSweep || k == ExperimentKind::Stability ||
         k == ExperimentKind::BoundsContainment || k == ExperimentKind::RegSweep;
}

void semantic_checks(const ExperimentConfig& cfg, std::vector<std::string>& errors,
                     std::vector<std::string>& warnings) {
  auto err = [&](const std::string& key, const std::string& what) {
    errors.push_back(key + ": " + what);
  };
  const auto& d = cfg.data;
  const auto& r = cfg.run;
  const auto& reg = cfg.regularizer;

  if (!(cfg.model.radius > 0.0)) err("model.radius", "must be positive");
  if (d.source == "libsvm") {
    if (d.path.empty()) {
      err("data.path", "required when data.source = libsvm");
    } else if (!std::filesystem::exists(d.path)) {
      err("data.path", "file '" + d.path + "' does not exist");
    }
  }
  if (d.margin < 0.0) err("data.margin", "must be nonnegative");
  if (d.noise.empty() && (cfg.kind == ExperimentKind::VarianceSweep)) {
    err("data.noise", "must be nonempty for variance-sweep");
  }
  for (double p : d.noise) {
    if (p < 0.0 || p > 1.0) err("data.noise", "probabilities must lie in [0, 1]");
  }
  if (d.labels.empty()) err("data.labels", "must be nonempty");

  if (cfg.schedule.c && cfg.schedule.c_scale) err("schedule", "set only one of c and c_scale");
  const std::optional<double> c_any = cfg.schedule.c ? cfg.schedule.c : cfg.schedule.c_scale;
  if (c_any && !(*c_any > 0.0)) err(cfg.schedule.c ? "schedule.c" : "schedule.c_scale", "must be positive");
  if (cfg.schedule.c_scale && *cfg.schedule.c_scale >= 1.0) {
    warnings.push_back("schedule.c_scale: c >= 1/L violates the step-size assumption");
  }

  if (!reg.lambda.empty() && !reg.lambda_scale.empty()) {
    err("regularizer", "set only one of lambda and lambda_scale");
  }
  for (double v : reg.lambda) {
    if (!(v > 0.0)) err("regularizer.lambda", "weights must be positive");
  }
  for (double v : reg.lambda_scale) {
    if (!(v > 0.0)) err("regularizer.lambda_scale", "multiples must be positive");
  }
  if (reg.mu < 0.0) err("regularizer.mu", "must be nonnegative");
  if (reg.kind == RegKind::Tikhonov && reg.gamma_diag.empty()) {
    err("regularizer.gamma_diag", "required for tikhonov");
  }
  if (reg.kind == RegKind::Tikhonov && !reg.gamma_diag.empty() && cfg.data.source == "gaussian" &&
      static_cast<Eigen::Index>(reg.gamma_diag.size()) != cfg.data.d) {
    err("regularizer.gamma_diag", "must have data.d entries");
  }
  for (double v : reg.gamma_diag) {
    if (v == 0.0) err("regularizer.gamma_diag", "entries must be nonzero");
  }
  const bool has_lambda = !reg.lambda.empty() || !reg.lambda_scale.empty();
  const bool needs_reg = cfg.kind == ExperimentKind::RegSweep ||
                         cfg.kind == ExperimentKind::ProxCheck ||
                         cfg.kind == ExperimentKind::PathProbe;
  if (needs_reg && !reg.kind) err("regularizer.kind", "required for " + to_string(cfg.kind));
  if ((needs_reg || reg.kind) && !has_lambda) {
    err("regularizer.lambda", "a nonempty lambda or lambda_scale list is required");
  }
  if (cfg.kind == ExperimentKind::BoundsContainment && reg.kind) {
    for (double v : reg.lambda_scale) {
      if (v <= 1.0) {
        err("regularizer.lambda_scale",
            "the proximal bound is undefined for lambda <= L (got " + std::to_string(v) + " L)");
      }
    }
    if (!reg.lambda.empty()) {
      warnings.push_back(
          "regularizer.lambda: absolute weights are checked against L only once data is drawn");
    }
  }
  if ((cfg.kind == ExperimentKind::BoundsContainment ||
       cfg.kind == ExperimentKind::PathProbe) && reg.kind &&
      cfg.schedule.kind != ScheduleKind::Inverse) {
    warnings.push_back("schedule.kind: proximal bounds assume the inverse schedule");
  }

  if (!(r.confidence > 0.0 && r.confidence < 1.0)) err("run.confidence", "must lie in (0, 1)");
  if (!(r.t0_fraction >= 0.0 && r.t0_fraction < 1.0)) err("run.t0_fraction", "must lie in [0, 1)");
  for (auto h : r.horizons) {
    if (h < 1) err("run.horizons", "horizons must be positive");
  }
  if (uses_variance(cfg.kind) && r.window > r.T / r.thin + 1) {
    err("run.window", "exceeds the " + std::to_string(r.T / r.thin + 1) +
                          " iterates stored for T / thin");
  }
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) {
      out += fmt(xs[i]);
    } else {
      out += std::to_string(xs[i]);
    }
  }
  return out;
}

}  // namespace

ValidationResult validate_config(std::string_view text) {
  ValidationResult result;
  std::map<std::string, std::string> values;
  std::istringstream in{std::string(text)};
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = "line " + std::to_string(lineno);
    if (t.front() == '[') {
      if (t.back() != ']') {
        result.errors.push_back(where + ": malformed section header '" + t + "'");
        continue;
      }
      section = trim(std::string_view(t).substr(1, t.size() - 2));
      if (!schema().contains(section)) {
        result.errors.push_back(section + ": unknown section (" + where + ")");
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      result.errors.push_back(where + ": expected key = value");
      continue;
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (section.empty()) {
      result.errors.push_back(key + ": key outside any section (" + where + ")");
      continue;
    }
    const std::string path = section + "." + key;
    auto sec = schema().find(section);
    if (sec == schema().end()) continue;
    if (!sec->second.contains(key)) {
      result.errors.push_back(path + ": unknown key (" + where + ")");
      continue;
    }
    if (!values.emplace(path, value).second) {
      result.errors.push_back(path + ": duplicate key (" + where + ")");
    }
  }

  Reader rd(values);
  ExperimentConfig cfg;
  if (rd.raw("experiment.kind") == nullptr) {
    rd.error("experiment.kind", "required");
  } else {
    rd.choice("experiment.kind", kExperimentKinds, cfg.kind);
  }
  rd.choice("model.kind", kModelKinds, cfg.model.kind);
  {
    std::vector<std::size_t> hidden;
    if (rd.raw("model.hidden")) {
      rd.list("model.hidden", hidden);
      if (std::any_of(hidden.begin(), hidden.end(), [](std::size_t h) { return h == 0; })) {
        rd.error("model.hidden", "widths must be positive");
      }
      cfg.model.hidden.assign(hidden.begin(), hidden.end());
    }
  }
  rd.real("model.radius", cfg.model.radius);
  rd.choice("data.source", kSources, cfg.data.source);
  if (const auto* p = rd.raw("data.path")) cfg.data.path = *p;
  rd.count("data.n", cfg.data.n, 2);
  {
    std::size_t d = static_cast<std::size_t>(cfg.data.d);
    rd.count("data.d", d, 1);
    cfg.data.d = static_cast<Eigen::Index>(d);
  }
  rd.real("data.margin", cfg.data.margin);
  rd.count("data.held_out", cfg.data.held_out, 1);
  rd.list("data.noise", cfg.data.noise);
  rd.list("data.labels", cfg.data.labels);
  rd.choice("schedule.kind", kScheduleKinds, cfg.schedule.kind);
  rd.real("schedule.c", cfg.schedule.c);
  rd.real("schedule.c_scale", cfg.schedule.c_scale);
  rd.choice("regularizer.kind", kRegKinds, cfg.regularizer.kind);
  rd.list("regularizer.lambda", cfg.regularizer.lambda);
  rd.list("regularizer.lambda_scale", cfg.regularizer.lambda_scale);
  rd.real("regularizer.mu", cfg.regularizer.mu);
  rd.list("regularizer.gamma_diag", cfg.regularizer.gamma_diag);
  rd.count("run.T", cfg.run.T, 1);
  rd.count("run.datasets", cfg.run.datasets, 1);
  rd.count("run.paths", cfg.run.paths, 1);
  rd.seed("run.seed", cfg.run.seed);
  rd.count("run.window", cfg.run.window, 1);
  rd.count("run.thin", cfg.run.thin, 1);
  rd.real("run.confidence", cfg.run.confidence);
  rd.real("run.t0_fraction", cfg.run.t0_fraction);
  rd.list("run.horizons", cfg.run.horizons);
  rd.count("run.probes", cfg.run.probes, 1);
  if (!cfg.schedule.c && !cfg.schedule.c_scale) cfg.schedule.c_scale = 0.5;

  result.errors.insert(result.errors.end(), rd.errors.begin(), rd.errors.end());
  if (result.errors.empty()) semantic_checks(cfg, result.errors, result.warnings);
  if (result.errors.empty()) result.config = std::move(cfg);
  return result;
}

std::string canonical_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "[experiment]\nkind = " << to_string(cfg.kind) << "\n\n";
  out << "[model]\nkind = " << to_string(cfg.model.kind) << "\n";
  out << "hidden = " << join(cfg.model.hidden) << "\n";
  out << "radius = " << fmt(cfg.model.radius) << "\n\n";
  out << "[data]\nsource = " << cfg.data.source << "\n";
  if (!cfg.data.path.empty()) out << "path = " << cfg.data.path << "\n";
  out << "n = " << cfg.data.n << "\nd = " << cfg.data.d << "\nmargin = " << fmt(cfg.data.margin)
      << "\nheld_out = " << cfg.data.held_out << "\nnoise = " << join(cfg.data.noise)
      << "\nlabels = " << join(cfg.data.labels) << "\n\n";
  out << "[schedule]\nkind = " << to_string(cfg.schedule.kind) << "\n";
  if (cfg.schedule.c) out << "c = " << fmt(*cfg.schedule.c) << "\n";
  if (cfg.schedule.c_scale) out << "c_scale = " << fmt(*cfg.schedule.c_scale) << "\n";
  out << "\n[regularizer]\nkind = "
      << (cfg.regularizer.kind ? to_string(*cfg.regularizer.kind) : std::string("none")) << "\n";
  if (!cfg.regularizer.lambda.empty()) out << "lambda = " << join(cfg.regularizer.lambda) << "\n";
  if (!cfg.regularizer.lambda_scale.empty()) {
    out << "lambda_scale = " << join(cfg.regularizer.lambda_scale) << "\n";
  }
  out << "mu = " << fmt(cfg.regularizer.mu) << "\n";
  if (!cfg.regularizer.gamma_diag.empty()) {
    out << "gamma_diag = " << join(cfg.regularizer.gamma_diag) << "\n";
  }
  const auto& r = cfg.run;
  out << "\n[run]\nT = " << r.T << "\ndatasets = " << r.datasets << "\npaths = " << r.paths
      << "\nseed = " << r.seed << "\nwindow = " << r.window << "\nthin = " << r.thin
      << "\nconfidence = " << fmt(r.confidence) << "\nt0_fraction = " << fmt(r.t0_fraction)
      << "\nhorizons = " << join(r.horizons) << "\nprobes = " << r.probes << "\n";
  return out.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical_text(cfg)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace stablab
