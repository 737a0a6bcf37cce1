#include "stablab/emit.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "stablab/stats.hpp"

namespace stablab {

bool ResultRow::has_flag(std::string_view flag) const {
  std::string_view rest(flags);
  while (!rest.empty()) {
    const auto bar = rest.find('|');
    if (rest.substr(0, bar) == flag) return true;
    if (bar == std::string_view::npos) break;
    rest.remove_prefix(bar + 1);
  }
  return false;
}

const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "kind",      "sweep",      "dataset",     "path",     "nu2",        "delta_T",
      "train_risk", "test_risk", "gap",         "beta_hat", "rho_hat",    "bound_name",
      "bound_value", "aux_name", "aux_value",   "flags",    "master_seed", "config_hash"};
  return cols;
}

namespace {

void put_number(std::string& out, double v) {
  if (std::isnan(v)) return;
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double get_number(const std::string& s) {
  if (s.empty()) return kMissing;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("results csv: bad number '" + s + "'");
  }
  return v;
}

std::uint64_t get_uint(const std::string& s, int base = 10) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("results csv: bad integer '" + s + "'");
  }
  return v;
}

struct Metric {
  const char* name;
  double ResultRow::*field;
};

constexpr Metric kMetrics[] = {
    {"nu2", &ResultRow::nu2},           {"delta_T", &ResultRow::delta_T},
    {"train_risk", &ResultRow::train_risk}, {"test_risk", &ResultRow::test_risk},
    {"gap", &ResultRow::gap},           {"beta_hat", &ResultRow::beta_hat},
    {"rho_hat", &ResultRow::rho_hat},   {"bound_value", &ResultRow::bound_value},
};

nlohmann::json number_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

void write_csv(std::ostream& out, std::span<const ResultRow> rows) {
  std::string buf = "# stability-lab results v1\n";
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) buf += (i ? "," : "") + cols[i];
  buf += '\n';
  for (const auto& r : rows) {
    buf += r.kind;
    buf += ',';
    put_number(buf, r.sweep);
    buf += ',' + std::to_string(r.dataset) + ',' + std::to_string(r.path) + ',';
    for (double v : {r.nu2, r.delta_T, r.train_risk, r.test_risk, r.gap, r.beta_hat, r.rho_hat}) {
      put_number(buf, v);
      buf += ',';
    }
    buf += r.bound_name + ',';
    put_number(buf, r.bound_value);
    buf += ',' + r.aux_name + ',';
    put_number(buf, r.aux_value);
    buf += ',' + r.flags + ',' + std::to_string(r.master_seed) + ',' + hex64(r.config_hash) + '\n';
  }
  out << buf;
}

std::vector<ResultRow> read_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (!header) {
      if (cells != csv_columns()) throw std::runtime_error("results csv: unexpected header");
      header = true;
      continue;
    }
    if (cells.size() != csv_columns().size()) {
      throw std::runtime_error("results csv: row has " + std::to_string(cells.size()) + " cells");
    }
    ResultRow r;
    r.kind = cells[0];
    r.sweep = get_number(cells[1]);
    r.dataset = get_uint(cells[2]);
    r.path = get_uint(cells[3]);
    r.nu2 = get_number(cells[4]);
    r.delta_T = get_number(cells[5]);
    r.train_risk = get_number(cells[6]);
    r.test_risk = get_number(cells[7]);
    r.gap = get_number(cells[8]);
    r.beta_hat = get_number(cells[9]);
    r.rho_hat = get_number(cells[10]);
    r.bound_name = cells[11];
    r.bound_value = get_number(cells[12]);
    r.aux_name = cells[13];
    r.aux_value = get_number(cells[14]);
    r.flags = cells[15];
    r.master_seed = get_uint(cells[16]);
    r.config_hash = get_uint(cells[17], 16);
    rows.push_back(std::move(r));
  }
  return rows;
}

nlohmann::json summarize(std::span<const ResultRow> rows, const nlohmann::json& extras) {
  using nlohmann::json;
  json out = json::object();
  out["rows"] = rows.size();
  if (!rows.empty()) {
    out["kind"] = rows.front().kind;
    out["master_seed"] = rows.front().master_seed;
    out["config_hash"] = hex64(rows.front().config_hash);
  }

  // Group rows by sweep value, keeping one metric series per column and per
  // auxiliary quantity name.
  std::map<double, std::map<std::string, std::vector<double>>> groups;
  std::map<double, std::pair<std::size_t, std::size_t>> counts;  // rows, invalid
  std::size_t invalid = 0;
  for (const auto& r : rows) {
    auto& c = counts[r.sweep];
    ++c.first;
    if (r.has_flag("invalid")) {
      ++c.second;
      ++invalid;
      continue;
    }
    auto& g = groups[r.sweep];
    for (const auto& m : kMetrics) {
      const double v = r.*(m.field);
      if (std::isfinite(v)) g[m.name].push_back(v);
    }
    if (!r.aux_name.empty() && std::isfinite(r.aux_value)) g["aux:" + r.aux_name].push_back(r.aux_value);
  }
  out["invalid_rows"] = invalid;

  json jgroups = json::array();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> series;
  for (const auto& [sweep, c] : counts) {
    json jg = json::object();
    jg["sweep"] = number_or_null(sweep);
    jg["rows"] = c.first;
    jg["invalid"] = c.second;
    json metrics = json::object();
    for (const auto& [name, values] : groups[sweep]) {
      const double m = mean(values);
      metrics[name] = {{"mean", m}, {"stderr", standard_error(values)}, {"count", values.size()}};
      series[name].first.push_back(sweep);
      series[name].second.push_back(m);
    }
    jg["metrics"] = std::move(metrics);
    jgroups.push_back(std::move(jg));
  }
  out["groups"] = std::move(jgroups);

  json trends = json::object();
  for (const auto& [name, xy] : series) {
    if (xy.first.size() >= 2 && xy.first.size() == counts.size()) {
      trends[name] = number_or_null(spearman(xy.first, xy.second));
    }
  }
  out["spearman"] = std::move(trends);

  std::map<std::string, std::pair<std::size_t, std::size_t>> containment;
  for (const auto& r : rows) {
    if (r.has_flag("invalid") || r.has_flag("assumptions-violated")) continue;
    if (!std::isfinite(r.bound_value) || !std::isfinite(r.gap)) continue;
    auto& c = containment[r.bound_name];
    ++c.first;
    if (r.gap <= r.bound_value) ++c.second;
  }
  json jc = json::object();
  for (const auto& [name, c] : containment) {
    jc[name] = {{"trials", c.first},
                {"contained", c.second},
                {"frequency", static_cast<double>(c.second) / static_cast<double>(c.first)}};
  }
  out["containment"] = std::move(jc);
  if (!extras.empty()) out["extras"] = extras;
  return out;
}

EmittedFiles emit(std::span<const ResultRow> rows, const nlohmann::json& summary,
                  const std::filesystem::path& dir) {
  if (rows.empty()) throw std::invalid_argument("emit: no rows to write");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string());
  EmittedFiles files{dir / "results.csv", dir / "summary.json"};
  {
    std::ofstream out(files.csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.csv.string());
    write_csv(out, rows);
    if (!out) throw std::runtime_error("failed writing " + files.csv.string());
  }
  {
    std::ofstream out(files.json, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + files.json.string());
    out << summary.dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing " + files.json.string());
  }
  return files;
}

}  // namespace stablab
