#include "stablab/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace stablab {

bool operator==(const Sample& a, const Sample& b) {
  return a.label == b.label && a.features.size() == b.features.size() &&
         a.features == b.features;
}

double Dataset::max_feature_norm() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, s.features.norm());
  return m;
}

double Dataset::max_abs_label() const {
  double m = 0.0;
  for (const auto& s : samples) m = std::max(m, std::abs(s.label));
  return m;
}

Matrix Dataset::design_matrix() const {
  Matrix x(static_cast<Eigen::Index>(samples.size()), dim);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = samples[i].features.transpose();
  }
  return x;
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

template <typename T>
bool parse_number(std::string_view tok, T& out) {
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string_view next_token(std::string_view& rest) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r'; };
  std::size_t b = 0;
  while (b < rest.size() && is_space(rest[b])) ++b;
  std::size_t e = b;
  while (e < rest.size() && !is_space(rest[e])) ++e;
  auto tok = rest.substr(b, e - b);
  rest.remove_prefix(e);
  return tok;
}

struct SparseRow {
  double label;
  std::vector<std::pair<Eigen::Index, double>> entries;
};

void append_shortest(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, ptr);
}

Sample draw_gaussian_class(Eigen::Index d, double margin, double label, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double shift = label * margin / std::sqrt(static_cast<double>(d));
  const double scale = 1.0 / (margin + std::sqrt(static_cast<double>(d)) + 4.0);
  Vector x(d);
  for (Eigen::Index j = 0; j < d; ++j) x[j] = (shift + normal(rng)) * scale;
  const double norm = x.norm();
  if (norm > 1.0) x /= norm;
  return Sample{std::move(x), label};
}

}  // namespace

Dataset parse_libsvm(std::istream& in, ParseOptions options) {
  std::vector<SparseRow> rows;
  Eigen::Index dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view rest(line);
    auto tok = next_token(rest);
    if (tok.empty()) continue;
    SparseRow row{};
    if (!parse_number(tok, row.label) || !std::isfinite(row.label)) {
      throw ParseError(lineno, "invalid label '" + std::string(tok) + "'");
    }
    Eigen::Index last = 0;
    for (tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
      const auto colon = tok.find(':');
      if (colon == std::string_view::npos) {
        throw ParseError(lineno, "expected <index>:<value>, got '" + std::string(tok) + "'");
      }
      long long idx = 0;
      double val = 0.0;
      if (!parse_number(tok.substr(0, colon), idx) || idx < 1) {
        throw ParseError(lineno, "invalid feature index in '" + std::string(tok) + "'");
      }
      if (!parse_number(tok.substr(colon + 1), val) || !std::isfinite(val)) {
        throw ParseError(lineno, "invalid feature value in '" + std::string(tok) + "'");
      }
      if (idx <= last) {
        throw ParseError(lineno, "feature indices must be strictly increasing");
      }
      last = static_cast<Eigen::Index>(idx);
      row.entries.emplace_back(last - 1, val);
    }
    dim = std::max(dim, last);
    rows.push_back(std::move(row));
  }
  if (rows.empty() && !options.allow_empty) {
    throw ParseError(lineno, "empty LIBSVM input");
  }
  Dataset ds;
  ds.dim = dim;
  ds.provenance.source = "libsvm";
  ds.samples.reserve(rows.size());
  for (auto& row : rows) {
    Vector x = Vector::Zero(dim);
    for (auto [j, v] : row.entries) x[j] = v;
    ds.samples.push_back(Sample{std::move(x), row.label});
  }
  return ds;
}

Dataset parse_libsvm(std::string_view text, ParseOptions options) {
  std::istringstream in{std::string(text)};
  return parse_libsvm(in, options);
}

Dataset load_libsvm(const std::filesystem::path& path, ParseOptions options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return parse_libsvm(in, options);
}

void write_libsvm(std::ostream& out, const Dataset& ds) {
  out << serialize_libsvm(ds);
}

std::string serialize_libsvm(const Dataset& ds) {
  std::string out;
  for (const auto& s : ds.samples) {
    append_shortest(out, s.label);
    for (Eigen::Index j = 0; j < ds.dim; ++j) {
      const double v = s.features[j];
      if (v == 0.0 && j + 1 < ds.dim) continue;
      out.push_back(' ');
      out += std::to_string(j + 1);
      out.push_back(':');
      append_shortest(out, v);
    }
    out.push_back('\n');
  }
  return out;
}

Sample gaussian_sample(Eigen::Index d, double margin, Rng& rng) {
  std::bernoulli_distribution coin(0.5);
  const double label = coin(rng) ? 1.0 : -1.0;
  return draw_gaussian_class(d, margin, label, rng);
}

Dataset synth_gaussian(std::size_t n, Eigen::Index d, double margin, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("synth_gaussian: n must be at least 2");
  if (d < 1) throw std::invalid_argument("synth_gaussian: d must be at least 1");
  if (!(margin >= 0.0)) throw std::invalid_argument("synth_gaussian: margin must be nonnegative");
  Rng rng(seed);
  std::vector<double> labels(n, -1.0);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>((n + 1) / 2), 1.0);
  std::shuffle(labels.begin(), labels.end(), rng);
  Dataset ds;
  ds.dim = d;
  ds.provenance = Provenance{"gaussian", seed, 0.0};
  ds.samples.reserve(n);
  for (double y : labels) ds.samples.push_back(draw_gaussian_class(d, margin, y, rng));
  return ds;
}

Dataset corrupt_labels(const Dataset& ds, const LabelNoiseSpec& spec) {
  if (!(spec.p >= 0.0 && spec.p <= 1.0)) {
    throw std::invalid_argument("corrupt_labels: p must lie in [0, 1]");
  }
  if (spec.alphabet.empty()) throw std::invalid_argument("corrupt_labels: empty label alphabet");
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double y = ds[i].label;
    if (std::find(spec.alphabet.begin(), spec.alphabet.end(), y) == spec.alphabet.end()) {
      throw std::invalid_argument("corrupt_labels: label of sample " + std::to_string(i) +
                                  " is outside the alphabet");
    }
  }
  Rng rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, spec.alphabet.size() - 1);
  Dataset out = ds;
  out.provenance.corruption = spec.p;
  for (auto& s : out.samples) {
    const double u = unit(rng);
    const std::size_t k = pick(rng);
    if (u < spec.p) s.label = spec.alphabet[k];
  }
  return out;
}

PerturbedPair replace_one(const Dataset& ds, Sample fresh) {
  if (ds.empty()) throw std::invalid_argument("replace_one: dataset is empty");
  if (fresh.dim() != ds.dim) {
    throw DimensionError("replace_one: fresh sample has dimension " +
                         std::to_string(fresh.dim()) + ", dataset has " +
                         std::to_string(ds.dim));
  }
  PerturbedPair pair{ds, ds, 0};
  pair.replaced.samples[0] = std::move(fresh);
  return pair;
}

GaussianSource::GaussianSource(Eigen::Index d, double margin) : d_(d), margin_(margin) {
  if (d < 1) throw std::invalid_argument("GaussianSource: d must be at least 1");
  if (!(margin >= 0.0)) throw std::invalid_argument("GaussianSource: margin must be nonnegative");
}

Dataset GaussianSource::draw(std::size_t n, std::uint64_t seed) const {
  return synth_gaussian(n, d_, margin_, seed);
}

Sample GaussianSource::draw_one(std::uint64_t seed) const {
  Rng rng(seed);
  return gaussian_sample(d_, margin_, rng);
}

PoolSource::PoolSource(Dataset pool) : pool_(std::move(pool)) {
  if (pool_.empty()) throw std::invalid_argument("PoolSource: empty pool");
}

Dataset PoolSource::draw(std::size_t n, std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
  Dataset ds;
  ds.dim = pool_.dim;
  ds.provenance = Provenance{pool_.provenance.source, seed, 0.0};
  ds.samples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) ds.samples.push_back(pool_[pick(rng)]);
  return ds;
}

Sample PoolSource::draw_one(std::uint64_t seed) const {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, pool_.size() - 1);
  return pool_[pick(rng)];
}

NoisySource::NoisySource(std::shared_ptr<const DataSource> inner, double p,
                         std::vector<double> alphabet)
    : inner_(std::move(inner)), p_(p), alphabet_(std::move(alphabet)) {}

Dataset NoisySource::draw(std::size_t n, std::uint64_t seed) const {
  return corrupt_labels(inner_->draw(n, seed),
                        LabelNoiseSpec{p_, alphabet_, derive_seed(seed, SeedStream::LabelNoise, 0)});
}

Sample NoisySource::draw_one(std::uint64_t seed) const {
  Dataset one;
  one.dim = inner_->dim();
  one.samples.push_back(inner_->draw_one(seed));
  return corrupt_labels(one,
                        LabelNoiseSpec{p_, alphabet_, derive_seed(seed, SeedStream::LabelNoise, 1)})
      .samples.front();
}

}  // namespace stablab
