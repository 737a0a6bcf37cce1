#include "stablab/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace stablab {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Logistic: return "logistic";
    case ModelKind::LeastSquares: return "least-squares";
    case ModelKind::TinyMLP: return "tiny-mlp";
  }
  return "unknown";
}

void LossModel::check(const Vector& w, const Sample& z) const {
  if (w.size() != param_dim()) {
    throw DimensionError("parameter has dimension " + std::to_string(w.size()) + ", model expects " +
                         std::to_string(param_dim()));
  }
  if (z.dim() != input_dim()) {
    throw DimensionError("sample has dimension " + std::to_string(z.dim()) + ", model expects " +
                         std::to_string(input_dim()));
  }
}

double LossModel::loss(const Vector& w, const Sample& z) const {
  check(w, z);
  return loss_unchecked(w, z);
}

Vector LossModel::grad(const Vector& w, const Sample& z) const {
  Vector out;
  grad_into(w, z, out);
  return out;
}

void LossModel::grad_into(const Vector& w, const Sample& z, Vector& out) const {
  check(w, z);
  out.resize(param_dim());
  grad_unchecked(w, z, out);
}

namespace {

// log(1 + exp(v)) without overflow.
double softplus(double v) { return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

double LogisticModel::loss_unchecked(const Vector& w, const Sample& z) const {
  return softplus(-z.label * w.dot(z.features));
}

void LogisticModel::grad_unchecked(const Vector& w, const Sample& z, Vector& out) const {
  const double m = z.label * w.dot(z.features);
  out = (-z.label * sigmoid(-m)) * z.features;
}

double LeastSquaresModel::loss_unchecked(const Vector& w, const Sample& z) const {
  const double r = w.dot(z.features) - z.label;
  return 0.5 * r * r;
}

void LeastSquaresModel::grad_unchecked(const Vector& w, const Sample& z, Vector& out) const {
  out = (w.dot(z.features) - z.label) * z.features;
}

TinyMlpModel::TinyMlpModel(Eigen::Index input_dim, std::vector<Eigen::Index> hidden) {
  if (input_dim < 1) throw std::invalid_argument("TinyMlpModel: input dimension must be positive");
  widths_.push_back(input_dim);
  for (auto h : hidden) {
    if (h < 1) throw std::invalid_argument("TinyMlpModel: hidden widths must be positive");
    widths_.push_back(h);
  }
  widths_.push_back(1);
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    param_dim_ += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
}

double TinyMlpModel::forward_backward(const Vector& w, const Vector& x, double out_seed,
                                      Vector* grad) const {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const std::size_t layers = widths_.size() - 1;
  std::vector<Vector> acts;
  acts.reserve(layers + 1);
  acts.push_back(x);
  std::vector<Eigen::Index> offsets(layers);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layers; ++l) {
    offsets[l] = off;
    const auto rows = widths_[l + 1], cols = widths_[l];
    Eigen::Map<const RowMajor> weight(w.data() + off, rows, cols);
    Eigen::Map<const Vector> bias(w.data() + off + rows * cols, rows);
    Vector pre = weight * acts.back() + bias;
    if (l + 1 < layers) pre = pre.array().tanh().matrix();
    acts.push_back(std::move(pre));
    off += rows * cols + rows;
  }
  const double output = acts.back()[0];
  if (grad == nullptr) return output;

  grad->resize(param_dim_);
  Vector delta = Vector::Constant(1, out_seed);
  for (std::size_t l = layers; l-- > 0;) {
    const auto rows = widths_[l + 1], cols = widths_[l];
    Eigen::Map<RowMajor> gw(grad->data() + offsets[l], rows, cols);
    Eigen::Map<Vector> gb(grad->data() + offsets[l] + rows * cols, rows);
    gw.noalias() = delta * acts[l].transpose();
    gb = delta;
    if (l > 0) {
      Eigen::Map<const RowMajor> weight(w.data() + offsets[l], rows, cols);
      Vector back = weight.transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return output;
}

double TinyMlpModel::predict(const Vector& w, const Vector& x) const {
  return forward_backward(w, x, 0.0, nullptr);
}

Vector TinyMlpModel::output_gradient(const Vector& w, const Vector& x) const {
  Vector g;
  forward_backward(w, x, 1.0, &g);
  return g;
}

double TinyMlpModel::loss_unchecked(const Vector& w, const Sample& z) const {
  const double r = predict(w, z.features) - z.label;
  return 0.5 * r * r;
}

void TinyMlpModel::grad_unchecked(const Vector& w, const Sample& z, Vector& out) const {
  const double r = predict(w, z.features) - z.label;
  forward_backward(w, z.features, r, &out);
}

std::unique_ptr<LossModel> make_model(ModelKind kind, Eigen::Index input_dim,
                                      std::vector<Eigen::Index> hidden) {
  switch (kind) {
    case ModelKind::Logistic: return std::make_unique<LogisticModel>(input_dim);
    case ModelKind::LeastSquares: return std::make_unique<LeastSquaresModel>(input_dim);
    case ModelKind::TinyMLP: return std::make_unique<TinyMlpModel>(input_dim, std::move(hidden));
  }
  throw std::invalid_argument("make_model: unknown kind");
}

Vector random_in_ball(Eigen::Index dim, double radius, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector v(dim);
  for (Eigen::Index j = 0; j < dim; ++j) v[j] = normal(rng);
  const double r = radius * std::pow(unit(rng), 1.0 / static_cast<double>(dim));
  const double norm = v.norm();
  return norm > 0.0 ? Vector(v * (r / norm)) : Vector(Vector::Zero(dim));
}

namespace {

constexpr double kSafetyFactor = 1.5;
constexpr std::size_t kConstantSamples = 10000;

// Spectral norm of the loss Hessian at (w, z) by power iteration on
// central-difference Hessian-vector products.
double hessian_norm(const LossModel& model, const Vector& w, const Sample& z, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(w.size());
  for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = normal(rng);
  v.normalize();
  const double eps = 1e-5 * (1.0 + w.norm());
  Vector gp, gm;
  double est = 0.0;
  for (int it = 0; it < 12; ++it) {
    model.grad_into(w + eps * v, z, gp);
    model.grad_into(w - eps * v, z, gm);
    Vector hv = (gp - gm) / (2.0 * eps);
    est = hv.norm();
    if (est == 0.0) break;
    v = hv / est;
  }
  return est;
}

Constants sampled_constants(const TinyMlpModel& model, const Dataset& ds, double radius,
                            std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  double max_l = 0.0, max_g = 0.0, max_loss = 0.0;
  Vector g;
  for (std::size_t i = 0; i < kConstantSamples; ++i) {
    Vector w = random_in_ball(model.param_dim(), radius, rng);
    // Half of the probes sit on the sphere, where the loss bound is attained.
    if (i % 2 == 1 && w.norm() > 0.0) w *= radius / w.norm();
    const Sample& z = ds[pick(rng)];
    max_loss = std::max(max_loss, model.loss(w, z));
    model.grad_into(w, z, g);
    max_g = std::max(max_g, g.norm());
    max_l = std::max(max_l, hessian_norm(model, w, z, rng));
    // Curvature at the zero-residual label, where the Hessian is the
    // Gauss-Newton term.
    max_l = std::max(max_l, model.output_gradient(w, z.features).squaredNorm());
  }
  Constants k;
  k.L = kSafetyFactor * max_l;
  k.sigma = kSafetyFactor * max_g;
  k.M = kSafetyFactor * max_loss;
  k.radius = radius;
  k.estimated = true;
  return k;
}

}  // namespace

Constants constants(const LossModel& model, const Dataset& ds, double radius, std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("constants: dataset is empty");
  if (!(radius > 0.0)) throw std::invalid_argument("constants: radius must be positive");
  Constants k;
  k.radius = radius;
  switch (model.kind()) {
    case ModelKind::Logistic: {
      const double xmax = ds.max_feature_norm();
      k.L = xmax * xmax / 4.0;
      k.sigma = xmax;
      k.M = softplus(radius * xmax);
      break;
    }
    case ModelKind::LeastSquares: {
      for (const auto& s : ds.samples) {
        const double xn = s.features.norm();
        const double r = radius * xn + std::abs(s.label);
        k.L = std::max(k.L, xn * xn);
        k.sigma = std::max(k.sigma, r * xn);
        k.M = std::max(k.M, 0.5 * r * r);
      }
      try {
        k.gamma = gradient_dominance_constant(ds);
      } catch (const std::invalid_argument&) {
        k.gamma.reset();
      }
      break;
    }
    case ModelKind::TinyMLP:
      return sampled_constants(static_cast<const TinyMlpModel&>(model), ds, radius, seed);
  }
  return k;
}

double gradient_dominance_constant(const Dataset& ds) {
  if (ds.empty()) throw std::invalid_argument("gradient_dominance_constant: empty dataset");
  const Matrix x = ds.design_matrix();
  const Matrix gram = (x.transpose() * x) / static_cast<double>(ds.size());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
  const Vector& values = eig.eigenvalues();
  const double top = values.maxCoeff();
  if (!(top > 0.0)) {
    throw std::invalid_argument("gradient_dominance_constant: design matrix is all zero");
  }
  const double cutoff = top * 1e-10 * static_cast<double>(values.size());
  double smallest = top;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] > cutoff) smallest = std::min(smallest, values[i]);
  }
  return smallest;
}

double empirical_risk(const LossModel& model, const Dataset& ds, const Vector& w) {
  if (ds.empty()) throw std::invalid_argument("empirical_risk: dataset is empty");
  double sum = 0.0;
  for (const auto& s : ds.samples) sum += model.loss(w, s);
  return sum / static_cast<double>(ds.size());
}

Vector full_gradient(const LossModel& model, const Dataset& ds, const Vector& w) {
  if (ds.empty()) throw std::invalid_argument("full_gradient: dataset is empty");
  Vector sum = Vector::Zero(model.param_dim());
  Vector g;
  for (const auto& s : ds.samples) {
    model.grad_into(w, s, g);
    sum += g;
  }
  return sum / static_cast<double>(ds.size());
}

SelfBoundingReport check_self_bounding(const LossModel& model, const Dataset& ds,
                                       const Constants& k, std::size_t trials,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, ds.size() - 1);
  SelfBoundingReport report;
  report.trials = trials;
  report.pass = true;
  Vector g;
  for (std::size_t i = 0; i < trials; ++i) {
    const Vector w = random_in_ball(model.param_dim(), k.radius, rng);
    const Sample& z = ds[pick(rng)];
    model.grad_into(w, z, g);
    const double lhs = g.norm();
    const double rhs = std::sqrt(2.0 * k.L * model.loss(w, z));
    double ratio = 0.0;
    if (lhs > 0.0) ratio = rhs > 0.0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (lhs > rhs + 1e-9) report.pass = false;
  }
  return report;
}

}  // namespace stablab
