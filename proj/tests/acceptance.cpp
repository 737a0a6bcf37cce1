// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "bound_oracle.hpp"
#include "stablab/bounds.hpp"
#include "stablab/config.hpp"
#include "stablab/emit.hpp"
#include "stablab/estimators.hpp"
#include "stablab/experiments.hpp"
#include "stablab/stats.hpp"

using namespace stablab;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

ExperimentConfig parse(const std::string& text) {
  auto r = validate_config(text);
  if (!r.ok()) {
    std::string all;
    for (const auto& e : r.errors) all += e + "; ";
    throw std::runtime_error("bad acceptance config: " + all);
  }
  return *r.config;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const std::string kLogisticProblem = R"(
[model]
kind = logistic
[data]
n = 2000
d = 20
margin = 2
[run]
T = 20000
datasets = 5
paths = 4
)";

Outcome variance_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = parse("[experiment]\nkind = variance-sweep\n" + kLogisticProblem +
                         "[schedule]\nkind = slowlog\nc_scale = 0.5\n"
                         "[data]\nnoise = 0, 0.2, 0.4, 0.6, 0.8, 1.0\n");
  const auto out = run_config(cfg, {1, std::nullopt});
  const double secs = seconds_since(t0);
  const auto s = summarize(out.rows, out.extras);
  const double rho = s["spearman"]["nu2"].get<double>();
  return {rho >= 0.9 && secs < 300 && s["invalid_rows"] == 0,
          fmt("spearman(nu2, p) = %.3f, %zu rows, %.1f s single-threaded", rho, out.rows.size(), secs)};
}

Outcome regularization_trend() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto cfg = parse("[experiment]\nkind = reg-sweep\n" + kLogisticProblem +
                         "[schedule]\nkind = slowlog\nc_scale = 0.5\n"
                         "[regularizer]\nkind = ridge\nlambda_scale = 0.5, 1, 2, 4\n");
  const auto out = run_config(cfg, {1, std::nullopt});
  const double secs = seconds_since(t0);
  const auto s = summarize(out.rows, out.extras);
  const double gap = s["spearman"]["gap"].get<double>();
  const double train = s["spearman"]["train_risk"].get<double>();
  return {gap <= -0.8 && train >= 0.8 && secs < 300,
          fmt("spearman(gap, lambda) = %.3f, spearman(train, lambda) = %.3f, %.1f s", gap, train,
              secs)};
}

Outcome containment() {
  const std::string problem = R"(
[experiment]
kind = bounds-containment
[model]
kind = logistic
[data]
n = 500
d = 20
held_out = 4000
[run]
T = 5000
datasets = 60
paths = 4
confidence = 0.1
)";
  std::string detail;
  bool pass = true;
  for (const auto& [name, extra] :
       {std::pair{"thm1", "[schedule]\nkind = slowlog\nc_scale = 0.5\n"},
        std::pair{"thm4", "[schedule]\nkind = inverse\nc_scale = 0.5\n"
                          "[regularizer]\nkind = ridge\nlambda_scale = 3\n"}}) {
    const auto out = run_config(parse(problem + extra), {4, std::nullopt});
    const auto s = summarize(out.rows, out.extras);
    const auto& c = s["containment"][name];
    const std::size_t trials = c["trials"];
    const double freq = c["frequency"];
    pass = pass && trials >= 200 && freq >= 0.87;
    double worst = 0.0;
    for (const auto& r : out.rows) {
      if (std::isfinite(r.bound_value)) worst = std::max(worst, r.gap / r.bound_value);
    }
    detail += fmt("%s %.3f over %zu compliant trials (max gap/bound %.2e); ", name, freq, trials,
                  worst);
  }
  return {pass, detail};
}

Outcome recursion() {
  const std::size_t n = 100, T = 2000, datasets = 25, paths = 4;
  LogisticModel m(5);
  const GaussianSource src(5, 2.0);
  // Features lie in the unit ball, so L = 1/4 holds for every replica.
  const double L = 0.25;
  const StepSchedule s{ScheduleKind::SlowLog, 0.5 / L};
  CoupledOptions opts;
  opts.record_replaced_gradients = true;
  std::vector<std::vector<double>> paired(T), symmetric(T);
  double worst_path = -1.0;
  std::size_t runs = 0;
  for (std::size_t i = 0; i < datasets; ++i) {
    const Dataset ds = src.draw(n, derive_seed(2024, SeedStream::Dataset, i));
    const auto pair = replace_one(ds, src.draw_one(derive_seed(2024, SeedStream::FreshSample, i)));
    for (std::size_t j = 0; j < paths; ++j, ++runs) {
      const auto path = draw_path(n, T, derive_seed(2024, SeedStream::Path, i * paths + j));
      const auto run = run_coupled(m, pair, s, path, Vector::Zero(5), nullptr, opts);
      for (std::size_t t = 0; t < T; ++t) {
        const double a = s(t), d = run.delta[t], next = run.delta[t + 1];
        const double g = run.grad_norm_replaced[t], gbar = run.grad_norm_replaced_bar[t];
        const double growth = (1.0 + a * L) * d;
        paired[t].push_back(next - growth - a * (g + gbar) / static_cast<double>(n));
        symmetric[t].push_back(next - growth - 2.0 * a * g / static_cast<double>(n));
        const double pathwise = path[t] != 0 ? next - growth : next - d - a * (g + gbar);
        worst_path = std::max(worst_path, pathwise);
      }
    }
  }
  std::size_t violations = 0, violations_sym = 0;
  double worst_z = -1e300;
  for (std::size_t t = 0; t < T; ++t) {
    const double se = standard_error(paired[t]);
    const double mu = mean(paired[t]);
    if (mu > 3.0 * se) ++violations;
    if (mean(symmetric[t]) > 3.0 * standard_error(symmetric[t])) ++violations_sym;
    if (se > 0) worst_z = std::max(worst_z, mu / se);
  }
  return {runs == 100 && violations == 0 && violations_sym == 0 && worst_path <= 1e-9,
          fmt("%zu runs x %zu steps: averaged-recursion violations %zu (symmetric form %zu), "
              "max residual %.2f stderr; worst pathwise excess %.2e",
              runs, T, violations, violations_sym, worst_z, worst_path)};
}

// Mean and standard error of ||grad l(w_t; z_1)|| over replicas at the given steps.
struct GradProbe {
  std::vector<double> mean, se;
  double nu2 = 0.0, f_star = 0.0, f0 = 0.0, L = 0.0;
};

class RegressionSource final : public DataSource {
 public:
  RegressionSource(Eigen::Index d, double noise) : gauss_(d, 0.0), noise_(noise), d_(d) {}
  Dataset draw(std::size_t n, std::uint64_t seed) const override {
    Dataset ds = gauss_.draw(n, seed);
    Rng rng(derive_seed(seed, SeedStream::LabelNoise, 0));
    std::normal_distribution<double> eps(0.0, noise_);
    for (auto& z : ds.samples) z.label = z.features.sum() + eps(rng);
    return ds;
  }
  Sample draw_one(std::uint64_t seed) const override { return draw(2, seed)[0]; }
  Eigen::Index dim() const override { return d_; }

 private:
  GaussianSource gauss_;
  double noise_;
  Eigen::Index d_;
};

GradProbe probe_grad_norms(const LossModel& m, const DataSource& src, std::size_t n,
                           const std::vector<std::size_t>& steps, double c_scale, double L,
                           bool want_fstar) {
  const std::size_t reps = 200, T = steps.back();
  GradProbe out;
  out.L = L;
  const StepSchedule s{ScheduleKind::Inverse, c_scale / L};
  std::vector<std::vector<double>> norms(steps.size());
  std::vector<double> nu2s, fstars, f0s;
  const Vector w0 = Vector::Zero(m.param_dim());
  TrajectoryOptions opts;
  opts.thin = 100;
  for (std::size_t r = 0; r < reps; ++r) {
    const Dataset ds = src.draw(n, derive_seed(77, SeedStream::Dataset, r));
    const auto traj = run_sgd(m, ds, s, draw_path(n, T, derive_seed(77, SeedStream::Path, r)), w0, opts);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      const auto it = std::find(traj.stored_steps.begin(), traj.stored_steps.end(), steps[k]);
      const Vector& w = traj.stored[static_cast<std::size_t>(it - traj.stored_steps.begin())];
      norms[k].push_back(m.grad(w, ds[0]).norm());
    }
    nu2s.push_back(estimate_nu2(m, ds, traj, 50).mean);
    if (want_fstar) fstars.push_back(reference_minimum(m, ds).risk);
    f0s.push_back(empirical_risk(m, src.draw(2000, derive_seed(77, SeedStream::HeldOut, r)), w0));
  }
  for (const auto& v : norms) {
    out.mean.push_back(stablab::mean(v));
    out.se.push_back(standard_error(v));
  }
  out.nu2 = stablab::mean(nu2s);
  out.f0 = stablab::mean(f0s);
  if (want_fstar) out.f_star = stablab::mean(fstars);
  return out;
}

Outcome gradient_norms() {
  const std::vector<std::size_t> steps{100, 1000, 10000};
  bool pass = true;
  std::string detail;

  LogisticModel logit(10);
  const GaussianSource gauss(10, 2.0);
  const auto lg = probe_grad_norms(logit, gauss, 200, steps, 0.5, 0.25, false);
  BoundInputs in;
  in.L = lg.L;
  in.f0 = lg.f0;
  in.nu2 = lg.nu2;
  const double nonconvex = grad_norm_bounds(in).nonconvex;
  detail += "logistic bound " + fmt("%.3f", nonconvex) + " vs";
  for (std::size_t k = 0; k < steps.size(); ++k) {
    pass = pass && lg.mean[k] <= nonconvex + 3 * lg.se[k];
    detail += fmt(" %.3f", lg.mean[k]);
  }

  LeastSquaresModel ls(5);
  const RegressionSource reg(5, 0.3);
  // L = max ||x||^2 <= 1 because features lie in the unit ball.
  const auto lsq = probe_grad_norms(ls, reg, 200, steps, 0.5, 1.0, true);
  BoundInputs q;
  q.L = lsq.L;
  q.f0 = lsq.f0;
  q.nu2 = lsq.nu2;
  q.f_star = lsq.f_star;
  detail += "; least squares";
  for (std::size_t k = 0; k < steps.size(); ++k) {
    const double b = *grad_norm_bounds(q, static_cast<double>(steps[k])).gradient_dominant;
    pass = pass && lsq.mean[k] <= b + 3 * lsq.se[k];
    detail += fmt(" t=%zu %.4f<=%.4f", steps[k], lsq.mean[k], b);
  }
  return {pass, detail};
}

Outcome prox_contracts() {
  Rng rng(31337);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> step(0.001, 3.0);
  const Eigen::Index d = 6;
  auto draw = [&](double scale) {
    Vector v(d);
    for (Eigen::Index k = 0; k < d; ++k) v[k] = scale * normal(rng);
    return v;
  };
  Matrix gamma = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) gamma(i, j) += 0.4 * normal(rng);
  }
  const std::vector<std::pair<std::string, Regularizer>> regs{
      {"ridge", Regularizer::ridge(1.7)},
      {"elastic-net", Regularizer::elastic_net(0.6, 0.9)},
      {"tikhonov", Regularizer::tikhonov(gamma, 1.2)}};
  double worst_contract = -1.0, worst_map = -1.0, worst_oracle = 0.0;
  for (const auto& [name, reg] : regs) {
    for (int trial = 0; trial < 10000; ++trial) {
      const double a = step(rng);
      const Vector w = draw(3.0), v = draw(3.0), g1 = draw(1.0), g2 = draw(1.0);
      worst_contract = std::max(worst_contract, (reg.prox(w, a) - reg.prox(v, a)).norm() -
                                                    (w - v).norm() / (1.0 + a * reg.lambda()));
      worst_map = std::max(worst_map, (gradient_map(reg, {w, g1, a}) - gradient_map(reg, {w, g2, a})).norm() -
                                          (g1 - g2).norm());
    }
    for (int trial = 0; trial < 1000; ++trial) {
      worst_oracle = std::max(worst_oracle, prox_oracle_check(reg, draw(3.0), step(rng)).residual);
    }
  }
  return {worst_contract <= 1e-9 && worst_map <= 1e-9 && worst_oracle < 1e-8,
          fmt("3 regularizers x 1e4 triples: contraction excess %.2e, gradient-map excess %.2e; "
              "oracle residual %.2e on 3 x 1e3",
              worst_contract, worst_map, worst_oracle)};
}

Outcome path_decay() {
  LogisticModel m(10);
  const GaussianSource src(10, 2.0);
  const std::size_t n = 200;
  std::size_t decreasing = 0;
  double worst_slope = -1e300, rate = 0.0;
  std::string rhos;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Dataset ds = src.draw(n, derive_seed(seed, SeedStream::Dataset, 0));
    const Constants k = constants(m, ds, 50.0);
    const auto reg = Regularizer::ridge(3.0 * k.L);
    const double c = 0.75 / (reg.lambda() - k.L);
    rate = c * (reg.lambda() - k.L);
    UniformProbeConfig cfg;
    Rng rng(derive_seed(seed, SeedStream::Probe, 0));
    for (int a = 0; a < 2; ++a) cfg.pairs.push_back(replace_one(ds, src.draw_one(derive_seed(seed, SeedStream::FreshSample, a))));
    cfg.probes = src.draw(100, derive_seed(seed, SeedStream::HeldOut, 0)).samples;
    cfg.paths = 4;
    cfg.schedule = {ScheduleKind::Inverse, c};
    cfg.seed = seed;
    double rho[2];
    for (int h = 0; h < 2; ++h) {
      cfg.T = h == 0 ? 500 : 4000;
      cfg.t0_grid = {cfg.T / 10};
      rho[h] = probe_uniform(m, &reg, cfg).rho_hat;
    }
    decreasing += rho[1] < rho[0];
    rhos += fmt(" %.1e>%.1e", rho[0], rho[1]);

    const std::size_t T = 4000, t0 = T / 10;
    std::vector<double> curve(T + 1, 0.0);
    for (std::size_t j = 0; j < 4; ++j) {
      const auto path = draw_path(n, T, derive_seed(seed, SeedStream::Path, j));
      const std::size_t other = (path[t0] + 1 + j) % n;
      const auto pert = run_path_perturbed(m, ds, &reg, cfg.schedule, path, t0, other, Vector::Zero(10));
      for (std::size_t t = 0; t <= T; ++t) curve[t] += pert.delta[t] / 4.0;
    }
    std::vector<double> ts, ys;
    for (std::size_t t = 2 * t0; t <= T; ++t) {
      ts.push_back(static_cast<double>(t));
      ys.push_back(curve[t]);
    }
    worst_slope = std::max(worst_slope, loglog_slope(ts, ys));
  }
  return {worst_slope <= -rate + 0.1 && decreasing >= 9,
          fmt("worst fitted slope %.3f (limit %.3f); rho(4000) < rho(500) in %zu/10 seeds;%s",
              worst_slope, -rate + 0.1, decreasing, rhos.c_str())};
}

Outcome hygiene() {
  bool pass = true;
  std::string detail;
  Rng rng(5);
  std::normal_distribution<double> normal;
  const Dataset ds = synth_gaussian(500, 6, 2.0, 3);
  double worst_fd = 0.0, worst_ratio = 0.0;
  for (auto kind : {ModelKind::Logistic, ModelKind::LeastSquares, ModelKind::TinyMLP}) {
    const auto m = make_model(kind, 6, {5});
    for (int trial = 0; trial < 200; ++trial) {
      Vector w(m->param_dim());
      for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(rng);
      Sample z = ds[static_cast<std::size_t>(trial) % ds.size()];
      if (kind != ModelKind::Logistic) z.label = normal(rng);
      const double h = 1e-6 * (1.0 + w.norm());
      const Vector g = m->grad(w, z);
      Vector fd(w.size());
      for (Eigen::Index i = 0; i < w.size(); ++i) {
        Vector a = w, b = w;
        a[i] += h;
        b[i] -= h;
        fd[i] = (m->loss(a, z) - m->loss(b, z)) / (2 * h);
      }
      worst_fd = std::max(worst_fd, (g - fd).norm() / std::max(1.0, g.norm()));
    }
    const auto k = constants(*m, ds, 5.0, 11);
    const auto sb = check_self_bounding(*m, ds, k, 10000, 12);
    pass = pass && sb.pass && sb.trials == 10000;
    worst_ratio = std::max(worst_ratio, sb.worst_ratio);
  }
  pass = pass && worst_fd < 1e-5;
  detail += fmt("finite-difference rel err %.2e; self-bounding worst ratio %.4f; ", worst_fd, worst_ratio);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_rel = 0.0;
  for (int trial = 0; trial < 5000; ++trial) {
    BoundInputs in;
    in.n = 2 + static_cast<std::size_t>(u(rng) * 1e5);
    in.T = 2 + static_cast<std::size_t>(u(rng) * 1e6);
    in.confidence = 0.01 + 0.98 * u(rng);
    in.M = 0.1 + 20 * u(rng);
    in.sigma = 0.1 + 20 * u(rng);
    in.L = 0.01 + 5 * u(rng);
    in.f0 = 5 * u(rng) + 1e-3;
    in.nu2 = 5 * u(rng);
    in.f_star = u(rng) * in.f0;
    in.gamma = 0.01 + u(rng);
    in.delta_mean = u(rng);
    in.beta = 0.1 * u(rng);
    in.rho = 0.1 * u(rng);
    in.lambda = in.L * (1.01 + 10 * u(rng));
    in.phi0 = 5 * u(rng);
    in.c = (0.501 + 0.498 * u(rng)) / (*in.lambda - in.L);
    oracle::In p{static_cast<long double>(in.n), static_cast<long double>(in.T), in.confidence,
                 in.M, in.sigma, in.L, in.c, in.f0, in.nu2};
    p.gamma = *in.gamma;
    p.lambda = *in.lambda;
    p.fstar = *in.f_star;
    p.phi0 = *in.phi0;
    p.dmean = *in.delta_mean;
    p.beta = *in.beta;
    p.rho = *in.rho;
    auto rel = [](double a, long double b) { return static_cast<double>(std::fabs((a - b) / b)); };
    const double t = 1.0 + 1e4 * u(rng);
    for (double r : {rel(prop1_ms(in).value, oracle::prop1(p)), rel(thm1(in).value, oracle::thm1(p)),
                     rel(thm2_ms(in).value, oracle::thm2(p)), rel(thm3(in).value, oracle::thm3(p)),
                     rel(thm4(in).value, oracle::thm4(p)),
                     rel(lemma_uniform(in).value, oracle::lemma_uniform(p)),
                     rel(thm5(in).value, oracle::thm5(p)),
                     rel(grad_norm_bounds(in).nonconvex, oracle::grad_nonconvex(p)),
                     rel(*grad_norm_bounds(in, t).gradient_dominant, oracle::grad_dominant(p, t))}) {
      worst_rel = std::max(worst_rel, r);
    }
  }
  pass = pass && worst_rel <= 1e-12;
  detail += fmt("bound implementations max rel diff %.2e; ", worst_rel);

  const auto cfg = parse(R"(
[experiment]
kind = stability
[data]
n = 100
d = 5
noise = 0, 0.5
[run]
T = 1000
datasets = 3
paths = 3
)");
  std::vector<std::string> csvs;
  for (std::size_t workers : {1, 1, 4}) {
    const auto out = run_config(cfg, {workers, std::nullopt});
    std::ostringstream ss;
    write_csv(ss, out.rows);
    csvs.push_back(ss.str() + summarize(out.rows, out.extras).dump());
  }
  const bool identical = csvs[0] == csvs[1] && csvs[0] == csvs[2];
  pass = pass && identical;
  detail += identical ? "repeated runs byte-identical" : "repeated runs DIFFER";
  return {pass, detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 variance grows with label noise", variance_trend},
      {"2 regularization trades training risk for gap", regularization_trend},
      {"3 bound containment", containment},
      {"4 stability recursion", recursion},
      {"5 gradient-norm bounds", gradient_norms},
      {"6 prox contraction and oracle", prox_contracts},
      {"7 path-perturbation decay", path_decay},
      {"8 numerical hygiene", hygiene},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
