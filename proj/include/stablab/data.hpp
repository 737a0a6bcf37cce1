#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stablab/rng.hpp"
#include "stablab/types.hpp"

namespace stablab {

struct Sample {
  Vector features;
  double label = 0.0;

  Eigen::Index dim() const { return features.size(); }
};

bool operator==(const Sample& a, const Sample& b);

struct Provenance {
  std::string source;
  std::uint64_t seed = 0;
  double corruption = 0.0;
};

/// An ordered sample set S = {z_1, ..., z_n}. Every sample has dimension `dim`.
struct Dataset {
  std::vector<Sample> samples;
  Eigen::Index dim = 0;
  Provenance provenance;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const Sample& operator[](std::size_t i) const { return samples[i]; }

  /// Largest feature norm max_i ||x_i||.
  double max_feature_norm() const;
  /// Largest absolute label max_i |y_i|.
  double max_abs_label() const;
  /// n x d design matrix with one sample per row.
  Matrix design_matrix() const;
};

/// S and its replace-one copy S̄. The copies agree everywhere except at
/// `replaced_index`, which is always 0.
struct PerturbedPair {
  Dataset base;
  Dataset replaced;
  std::size_t replaced_index = 0;
};

struct LabelNoiseSpec {
  double p = 0.0;
  std::vector<double> alphabet{-1.0, 1.0};
  std::uint64_t seed = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct ParseOptions {
  bool allow_empty = false;
};

/// Reads LIBSVM text: one `<label> <idx>:<val> ...` record per line with
/// strictly increasing 1-based indices. Blank lines are skipped. The feature
/// dimension is the largest index seen.
Dataset parse_libsvm(std::istream& in, ParseOptions options = {});
Dataset parse_libsvm(std::string_view text, ParseOptions options = {});
Dataset load_libsvm(const std::filesystem::path& path, ParseOptions options = {});

/// Writes shortest round-trip decimals. Zero features are omitted except the
/// last coordinate, which is always written so the dimension survives a
/// round trip.
void write_libsvm(std::ostream& out, const Dataset& ds);
std::string serialize_libsvm(const Dataset& ds);

/// Balanced two-class Gaussian data. Class c in {+1,-1} is drawn from
/// N(c * margin * u, I) with u the normalized all-ones direction, then scaled
/// by 1/(margin + sqrt(d) + 4) and projected onto the unit ball, so every
/// ||x_i|| <= 1 and train, held-out and fresh draws share one distribution.
Dataset synth_gaussian(std::size_t n, Eigen::Index d, double margin, std::uint64_t seed);

/// One sample of the distribution synth_gaussian draws from, with the class
/// chosen by a fair coin.
Sample gaussian_sample(Eigen::Index d, double margin, Rng& rng);

/// Replaces each label with probability p by a uniform draw from the alphabet
/// (the draw may equal the original label). Every sample consumes the same
/// random numbers whatever p is, so corrupted sets are nested across p for a
/// fixed seed.
Dataset corrupt_labels(const Dataset& ds, const LabelNoiseSpec& spec);

PerturbedPair replace_one(const Dataset& ds, Sample fresh);

/// A data distribution D. Training sets, held-out sets and the fresh sample
/// that builds S̄ all come from the same source.
class DataSource {
 public:
  virtual ~DataSource() = default;
  virtual Dataset draw(std::size_t n, std::uint64_t seed) const = 0;
  virtual Sample draw_one(std::uint64_t seed) const = 0;
  virtual Eigen::Index dim() const = 0;
};

class GaussianSource final : public DataSource {
 public:
  GaussianSource(Eigen::Index d, double margin);
  Dataset draw(std::size_t n, std::uint64_t seed) const override;
  Sample draw_one(std::uint64_t seed) const override;
  Eigen::Index dim() const override { return d_; }

 private:
  Eigen::Index d_;
  double margin_;
};

/// Empirical distribution of a fixed pool (e.g. a LIBSVM file): draws are
/// uniform with replacement.
class PoolSource final : public DataSource {
 public:
  explicit PoolSource(Dataset pool);
  Dataset draw(std::size_t n, std::uint64_t seed) const override;
  Sample draw_one(std::uint64_t seed) const override;
  Eigen::Index dim() const override { return pool_.dim; }

 private:
  Dataset pool_;
};

/// Applies label corruption on top of another source.
class NoisySource final : public DataSource {
 public:
  NoisySource(std::shared_ptr<const DataSource> inner, double p, std::vector<double> alphabet);
  Dataset draw(std::size_t n, std::uint64_t seed) const override;
  Sample draw_one(std::uint64_t seed) const override;
  Eigen::Index dim() const override { return inner_->dim(); }

 private:
  std::shared_ptr<const DataSource> inner_;
  double p_;
  std::vector<double> alphabet_;
};

}  // namespace stablab
