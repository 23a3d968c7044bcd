#include "dynolearn/learnability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <istream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dynolearn/csv.hpp"
#include "dynolearn/errors.hpp"
#include "dynolearn/rng.hpp"

namespace dynolearn {

std::string to_string(PredictorKind kind) {
  switch (kind) {
    case PredictorKind::spectral: return "spectral";
    case PredictorKind::kalman: return "kalman";
    case PredictorKind::kernel: return "kernel";
    case PredictorKind::truth: return "truth";
    case PredictorKind::zero: return "zero";
    case PredictorKind::last_value: return "last_value";
    case PredictorKind::ar: return "ar";
  }
  return "?";
}

PredictorKind parse_predictor_kind(const std::string& name) {
  for (auto k : {PredictorKind::spectral, PredictorKind::kalman, PredictorKind::kernel, PredictorKind::truth,
                 PredictorKind::zero, PredictorKind::last_value, PredictorKind::ar})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown predictor kind '" + name + "'");
}

std::string describe(const PredictorConfig& c) {
  std::ostringstream os;
  os << to_string(c.kind);
  if (c.kind == PredictorKind::spectral) os << "(T_w=" << c.window << ",m=" << c.m << (c.sign_augmented ? ",±" : "") << ")";
  if (c.kind == PredictorKind::ar) os << "(" << c.ar_order << ")";
  return os.str();
}

std::string to_string(OracleKind kind) {
  switch (kind) {
    case OracleKind::kalman: return "kalman";
    case OracleKind::kernel: return "kernel";
    case OracleKind::truth: return "truth";
    case OracleKind::zero: return "zero";
  }
  return "?";
}

OracleKind parse_oracle_kind(const std::string& name) {
  for (auto k : {OracleKind::kalman, OracleKind::kernel, OracleKind::truth, OracleKind::zero})
    if (to_string(k) == name) return k;
  throw ConfigError("unknown oracle kind '" + name + "'");
}

PredictorKind predictor_kind_of(OracleKind kind) {
  switch (kind) {
    case OracleKind::kalman: return PredictorKind::kalman;
    case OracleKind::kernel: return PredictorKind::kernel;
    case OracleKind::truth: return PredictorKind::truth;
    case OracleKind::zero: break;
  }
  throw ContractViolation("the zero oracle has no predictor");
}

bool oracle_applicable(OracleKind oracle, const SystemSpec& system) {
  switch (oracle) {
    case OracleKind::kalman:
    case OracleKind::kernel: return std::holds_alternative<LdsSpec>(system);
    case OracleKind::truth: return is_noiseless(system);
    case OracleKind::zero: return true;
  }
  return false;
}

PredictorFactory::PredictorFactory(const SystemSpec& system, const PredictorConfig& config)
    : system_(system), config_(config) {
  validate(system_);
  const auto* lds = std::get_if<LdsSpec>(&system_);
  switch (config.kind) {
    case PredictorKind::spectral:
      bank_ = std::make_shared<const FilterBank>(build_filter_bank(config.window, config.m, config.sign_augmented));
      break;
    case PredictorKind::kalman:
      if (lds == nullptr) throw IncompatiblePairing("kalman predictor requires a linear system");
      kalman_ = std::make_shared<const KalmanGainSchedule>(*lds);
      break;
    case PredictorKind::kernel:
      if (lds == nullptr) throw IncompatiblePairing("kernel oracle requires a linear system");
      kernel_ = std::make_shared<const KernelOracle>(make_kernel_oracle(*lds, config.kernel_truncation));
      break;
    case PredictorKind::truth:
      if (!is_noiseless(system_)) throw IncompatiblePairing("truth oracle requires a noiseless system");
      break;
    case PredictorKind::ar:
      if (config.ar_order == 0) throw ContractViolation("ar predictor needs order >= 1");
      break;
    case PredictorKind::zero:
    case PredictorKind::last_value:
      break;
  }
}

std::unique_ptr<OnlinePredictor> PredictorFactory::make(const Trajectory& traj) const {
  const std::size_t p = obs_dim(system_);
  switch (config_.kind) {
    case PredictorKind::spectral: return std::make_unique<SpectralPredictor>(bank_, p, config_.readout);
    case PredictorKind::kalman: return std::make_unique<KalmanPredictor>(kalman_);
    case PredictorKind::kernel: return std::make_unique<KernelPredictor>(kernel_);
    case PredictorKind::truth: return std::make_unique<TruthPredictor>(traj, system_);
    case PredictorKind::zero: return std::make_unique<ZeroPredictor>(p);
    case PredictorKind::last_value: return std::make_unique<LastValuePredictor>(p);
    case PredictorKind::ar: return std::make_unique<ArPredictor>(config_.ar_order, p, config_.readout);
  }
  throw ContractViolation("unknown predictor kind");
}

std::size_t HarnessConfig::horizon() const {
  return t_grid.empty() ? 0 : t_grid.back() + std::max<std::size_t>(window, 1);
}

void HarnessConfig::validate() const {
  if (t_grid.empty()) throw ContractViolation("harness: t_grid must be non-empty");
  if (!std::is_sorted(t_grid.begin(), t_grid.end()) ||
      std::adjacent_find(t_grid.begin(), t_grid.end()) != t_grid.end())
    throw ContractViolation("harness: t_grid must be strictly increasing");
  if (n_traj < 2) throw ContractViolation("harness: n_traj must be >= 2");
  if (window == 0) throw ContractViolation("harness: window must be >= 1");
}

std::vector<std::size_t> log_grid(std::size_t start, std::size_t stop, std::size_t points) {
  if (start == 0 || stop < start || points == 0) throw ContractViolation("log_grid: need 1 <= start <= stop, points >= 1");
  std::vector<std::size_t> out;
  if (points == 1) return {start};
  const double ratio = std::log(static_cast<double>(stop) / static_cast<double>(start)) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const auto t = static_cast<std::size_t>(std::llround(static_cast<double>(start) * std::exp(ratio * static_cast<double>(i))));
    if (out.empty() || t > out.back()) out.push_back(std::min(t, stop));
  }
  out.back() = stop;
  return out;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

namespace {

constexpr double kZ95 = 1.959963984540054;

// Window-averaged per-step metrics for every (initial condition, trajectory),
// stored in pre-assigned slots so the reduction order never depends on
// thread scheduling.
struct Ensemble {
  std::size_t n_x0 = 0, n_traj = 0, n_metrics = 0, n_grid = 0;
  std::vector<double> values;

  double& at(std::size_t i, std::size_t j, std::size_t k, std::size_t g) {
    return values[((i * n_traj + j) * n_metrics + k) * n_grid + g];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t g) const {
    return values[((i * n_traj + j) * n_metrics + k) * n_grid + g];
  }
};

using MetricFn = std::function<void(const std::vector<Vector>& preds, const Vector& y, double* out)>;

double squared_error(const Vector& a, const Vector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::uint64_t digest_conditions(const std::vector<InitialCondition>& conds) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (const auto& c : conds) {
    h = mix64(h ^ static_cast<std::uint64_t>(c.stationary));
    for (double v : c.x0) {
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      h = mix64(h ^ bits);
    }
  }
  return h;
}

Ensemble run_ensemble(const SystemSpec& system, const HarnessConfig& harness,
                      const std::vector<const PredictorFactory*>& factories, std::size_t n_metrics,
                      const MetricFn& metric) {
  harness.validate();
  const auto conds = initial_conditions(init_policy(system), state_dim(system));
  const bool need_latent = std::any_of(factories.begin(), factories.end(), [](const PredictorFactory* f) {
    return f->config().kind == PredictorKind::truth;
  });
  const std::size_t horizon = harness.horizon();
  const auto& grid = harness.t_grid;

  Ensemble ens;
  ens.n_x0 = conds.size();
  ens.n_traj = harness.n_traj;
  ens.n_metrics = n_metrics;
  ens.n_grid = grid.size();
  ens.values.assign(ens.n_x0 * ens.n_traj * n_metrics * ens.n_grid, 0.0);

  const SeededRng master(harness.master_seed);
  parallel_for(ens.n_x0 * ens.n_traj, harness.threads, [&](std::size_t task) {
    const std::size_t i = task / ens.n_traj;
    const std::size_t j = task % ens.n_traj;
    const std::uint64_t seed = master.child_seed(task);
    const Vector x0 = resolve_initial_state(system, conds[i], seed);
    const Trajectory traj = simulate(system, horizon, x0, seed, need_latent);

    std::vector<std::unique_ptr<OnlinePredictor>> preds;
    preds.reserve(factories.size());
    for (const auto* f : factories) preds.push_back(f->make(traj));

    std::vector<Vector> yhat(preds.size());
    std::vector<double> buf(n_metrics);
    const double inv_window = 1.0 / static_cast<double>(harness.window);
    std::size_t first_open = 0;  // first grid point whose window has not closed
    for (std::size_t t = 0; t < horizon; ++t) {
      while (first_open < grid.size() && t >= grid[first_open] + harness.window) ++first_open;
      const bool scored = first_open < grid.size() && t >= grid[first_open];
      const Vector& y = traj.ys[t];
      if (scored) {
        for (std::size_t k = 0; k < preds.size(); ++k) yhat[k] = preds[k]->predict();
        metric(yhat, y, buf.data());
        for (std::size_t g = first_open; g < grid.size() && grid[g] <= t; ++g)
          for (std::size_t k = 0; k < n_metrics; ++k) ens.at(i, j, k, g) += buf[k] * inv_window;
      }
      for (auto& p : preds) p->observe(y);
    }
  });
  return ens;
}

struct PairStats {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double ci_diff = 0.0;
};

// Means of metrics a and b over trajectories and the 95% normal half-width
// of the mean of (a - b).
PairStats pair_stats(const Ensemble& ens, std::size_t i, std::size_t g, std::size_t a, std::optional<std::size_t> b) {
  const double n = static_cast<double>(ens.n_traj);
  PairStats s;
  double mean_d = 0.0;
  for (std::size_t j = 0; j < ens.n_traj; ++j) {
    const double va = ens.at(i, j, a, g);
    const double vb = b ? ens.at(i, j, *b, g) : 0.0;
    s.mean_a += va;
    s.mean_b += vb;
    mean_d += va - vb;
  }
  s.mean_a /= n;
  s.mean_b /= n;
  mean_d /= n;
  double ss = 0.0;
  for (std::size_t j = 0; j < ens.n_traj; ++j) {
    const double d = ens.at(i, j, a, g) - (b ? ens.at(i, j, *b, g) : 0.0) - mean_d;
    ss += d * d;
  }
  s.ci_diff = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  return s;
}

RiskCurve empty_curve(const SystemSpec& system, const HarnessConfig& harness) {
  RiskCurve c;
  c.t_grid = harness.t_grid;
  c.n_traj = harness.n_traj;
  c.x0_policy_digest = digest_conditions(initial_conditions(init_policy(system), state_dim(system)));
  const std::size_t n = harness.t_grid.size();
  c.excess_mean.assign(n, 0.0);
  c.excess_ci_half.assign(n, 0.0);
  c.raw_alg.assign(n, 0.0);
  c.raw_oracle.assign(n, 0.0);
  c.worst_x0.assign(n, 0);
  return c;
}

// Worst case over initial conditions of metric `a` minus metric `b` (b
// absent = 0). The `choose_b` hook lets the agnostic gap pick b per point.
RiskCurve worst_case_curve(const SystemSpec& system, const HarnessConfig& harness, const Ensemble& ens,
                           std::size_t a, const std::function<std::optional<std::size_t>(std::size_t, std::size_t)>& choose_b) {
  RiskCurve curve = empty_curve(system, harness);
  curve.per_x0_excess.assign(ens.n_x0, Vector(ens.n_grid, 0.0));
  for (std::size_t g = 0; g < ens.n_grid; ++g) {
    bool first = true;
    for (std::size_t i = 0; i < ens.n_x0; ++i) {
      const PairStats s = pair_stats(ens, i, g, a, choose_b(i, g));
      const double excess = s.mean_a - s.mean_b;
      curve.per_x0_excess[i][g] = excess;
      if (first || excess > curve.excess_mean[g]) {
        first = false;
        curve.excess_mean[g] = excess;
        curve.excess_ci_half[g] = s.ci_diff;
        curve.raw_alg[g] = s.mean_a;
        curve.raw_oracle[g] = s.mean_b;
        curve.worst_x0[g] = i;
      }
    }
  }
  return curve;
}

MetricFn squared_losses() {
  return [](const std::vector<Vector>& preds, const Vector& y, double* out) {
    for (std::size_t k = 0; k < preds.size(); ++k) out[k] = squared_error(preds[k], y);
  };
}

OracleKind resolve_oracle(OracleKind oracle, const SystemSpec& system, const HarnessConfig& harness) {
  if (oracle_applicable(oracle, system)) return oracle;
  if (!harness.allow_raw_fallback)
    throw IncompatiblePairing("oracle '" + to_string(oracle) + "' does not apply to this system; set oracle = \"zero\" for raw risk");
  return OracleKind::zero;
}

}  // namespace

RiskCurve estimate_excess_risk(const SystemSpec& system, const PredictorConfig& algorithm, OracleKind oracle,
                               const HarnessConfig& harness) {
  const OracleKind resolved = resolve_oracle(oracle, system, harness);
  const PredictorFactory alg(system, algorithm);
  std::vector<const PredictorFactory*> factories{&alg};
  std::optional<PredictorFactory> ref;
  if (resolved != OracleKind::zero) {
    ref.emplace(system, PredictorConfig::of(predictor_kind_of(resolved)));
    factories.push_back(&*ref);
  }
  const Ensemble ens = run_ensemble(system, harness, factories, factories.size(), squared_losses());
  const std::optional<std::size_t> b = ref ? std::optional<std::size_t>(1) : std::nullopt;
  RiskCurve curve = worst_case_curve(system, harness, ens, 0, [&](std::size_t, std::size_t) { return b; });
  curve.mode = resolved == OracleKind::zero ? "raw" : "excess";
  return curve;
}

BurnInReport burn_in_time(const RiskCurve& curve, double epsilon) {
  if (!(epsilon > 0.0)) throw ContractViolation("burn_in_time: epsilon must be > 0");
  BurnInReport r;
  r.epsilon = epsilon;
  if (curve.t_grid.empty()) return r;
  r.uniform_checked_to = curve.t_grid.back();
  std::size_t start = curve.t_grid.size();
  while (start > 0 && curve.excess_mean[start - 1] <= epsilon) --start;
  if (start < curve.t_grid.size()) r.t_star = curve.t_grid[start];
  return r;
}

FilterCountReport minimal_filter_count(const SystemSpec& system, double epsilon, const std::vector<std::size_t>& m_values,
                                       const PredictorConfig& spectral_base, OracleKind oracle,
                                       const HarnessConfig& harness) {
  if (m_values.empty() || !std::is_sorted(m_values.begin(), m_values.end()))
    throw ContractViolation("minimal_filter_count: m range must be non-empty and ascending");
  const OracleKind resolved = resolve_oracle(oracle, system, harness);
  std::vector<PredictorFactory> owned;
  owned.reserve(m_values.size() + 1);
  for (std::size_t m : m_values) {
    PredictorConfig c = spectral_base;
    c.kind = PredictorKind::spectral;
    c.m = m;
    owned.emplace_back(system, c);
  }
  if (resolved != OracleKind::zero) owned.emplace_back(system, PredictorConfig::of(predictor_kind_of(resolved)));
  std::vector<const PredictorFactory*> factories;
  for (const auto& f : owned) factories.push_back(&f);

  HarnessConfig terminal = harness;
  terminal.t_grid = {harness.t_grid.back()};
  const Ensemble ens = run_ensemble(system, terminal, factories, factories.size(), squared_losses());
  const std::optional<std::size_t> b =
      resolved != OracleKind::zero ? std::optional<std::size_t>(m_values.size()) : std::nullopt;

  FilterCountReport report;
  report.epsilon = epsilon;
  for (std::size_t k = 0; k < m_values.size(); ++k) {
    const RiskCurve c = worst_case_curve(system, terminal, ens, k, [&](std::size_t, std::size_t) { return b; });
    report.table.push_back({m_values[k], c.excess_mean[0], c.excess_ci_half[0]});
    if (!report.m_star && c.excess_mean[0] <= epsilon) report.m_star = m_values[k];
  }
  return report;
}

RiskCurve agnostic_gap(const SystemSpec& system, const PredictorConfig& algorithm,
                       const std::vector<PredictorConfig>& baselines, const HarnessConfig& harness) {
  if (baselines.empty()) throw ContractViolation("agnostic_gap: baseline class must be non-empty");
  std::vector<PredictorFactory> owned;
  owned.reserve(baselines.size() + 1);
  owned.emplace_back(system, algorithm);
  for (const auto& b : baselines) owned.emplace_back(system, b);
  std::vector<const PredictorFactory*> factories;
  for (const auto& f : owned) factories.push_back(&f);
  const Ensemble ens = run_ensemble(system, harness, factories, factories.size(), squared_losses());

  auto best_baseline = [&](std::size_t i, std::size_t g) -> std::optional<std::size_t> {
    std::size_t best = 1;
    double best_mean = INFINITY;
    for (std::size_t k = 1; k < factories.size(); ++k) {
      double mean = 0.0;
      for (std::size_t j = 0; j < ens.n_traj; ++j) mean += ens.at(i, j, k, g);
      if (mean < best_mean) {
        best_mean = mean;
        best = k;
      }
    }
    return best;
  };
  RiskCurve curve = worst_case_curve(system, harness, ens, 0, best_baseline);
  curve.mode = "agnostic";
  return curve;
}

BiasVarianceReport bias_variance_split(const SystemSpec& system, const PredictorConfig& spectral,
                                       const HarnessConfig& harness, std::size_t reference_multiplier) {
  const auto* lds = std::get_if<LdsSpec>(&system);
  if (lds == nullptr) throw IncompatiblePairing("bias_variance_split requires a linear system");
  if (spectral.kind != PredictorKind::spectral) throw ContractViolation("bias_variance_split: algorithm must be spectral");
  harness.validate();
  const PredictorFactory learner(system, spectral);
  const PredictorFactory kalman(system, PredictorConfig::of(PredictorKind::kalman));
  const std::size_t p = lds->obs_dim();

  // Reference fit of w* on one long run, seeded apart from the ensemble.
  const auto conds = initial_conditions(lds->init, lds->state_dim());
  const std::uint64_t ref_seed = SeededRng(harness.master_seed).child_seed(~std::uint64_t{0});
  const Vector x0 = resolve_initial_state(system, conds.front(), ref_seed);
  const Trajectory ref = simulate(system, reference_multiplier * harness.horizon(), x0, ref_seed, false);
  SpectralPredictor fit(learner.bank(), p, {spectral.readout.reg_scale, ref.horizon() + 1});
  for (const auto& y : ref.ys) fit.observe(y);
  fit.refit();
  const Matrix w_star = fit.weights();

  const auto bank = learner.bank();
  const auto& conds_all = conds;
  Ensemble ens;
  ens.n_x0 = conds_all.size();
  ens.n_traj = harness.n_traj;
  ens.n_metrics = 2;
  ens.n_grid = harness.t_grid.size();
  ens.values.assign(ens.n_x0 * ens.n_traj * 2 * ens.n_grid, 0.0);
  const auto& grid = harness.t_grid;
  const std::size_t horizon = harness.horizon();
  const SeededRng master(harness.master_seed);
  parallel_for(ens.n_x0 * ens.n_traj, harness.threads, [&](std::size_t task) {
    const std::size_t i = task / ens.n_traj;
    const std::size_t j = task % ens.n_traj;
    const std::uint64_t seed = master.child_seed(task);
    const Trajectory traj = simulate(system, horizon, resolve_initial_state(system, conds_all[i], seed), seed, false);
    SpectralPredictor online(bank, p, spectral.readout);
    SpectralPredictor fixed = SpectralPredictor::with_fixed_readout(bank, p, w_star);
    KalmanPredictor oracle = dynamic_cast<KalmanPredictor&>(*kalman.make(traj));
    const double inv_window = 1.0 / static_cast<double>(harness.window);
    std::size_t first_open = 0;
    for (std::size_t t = 0; t < horizon; ++t) {
      while (first_open < grid.size() && t >= grid[first_open] + harness.window) ++first_open;
      if (first_open < grid.size() && t >= grid[first_open]) {
        const Vector z = online.current_features();
        const Vector y_online = online.predict_from(z);
        const Vector y_star = fixed.predict_from(z);
        const Vector y_kalman = oracle.predict();
        const double bias = squared_error(y_star, y_kalman);
        const double variance = squared_error(y_online, y_star);
        for (std::size_t g = first_open; g < grid.size() && grid[g] <= t; ++g) {
          ens.at(i, j, 0, g) += bias * inv_window;
          ens.at(i, j, 1, g) += variance * inv_window;
        }
      }
      online.observe(traj.ys[t]);
      oracle.observe(traj.ys[t]);
    }
  });

  auto none = [](std::size_t, std::size_t) { return std::optional<std::size_t>{}; };
  BiasVarianceReport report;
  report.bias = worst_case_curve(system, harness, ens, 0, none);
  report.bias.mode = "bias";
  report.variance = worst_case_curve(system, harness, ens, 1, none);
  report.variance.mode = "variance";
  report.w_star = w_star;
  return report;
}

double stationary_signal_power(const LdsSpec& spec) {
  const Matrix sigma = stationary_covariance(spec.transition(), spec.process_covariance());
  const Matrix cov = spec.C * sigma * spec.C.transpose() + spec.obs_covariance();
  double tr = 0.0;
  for (std::size_t i = 0; i < cov.rows(); ++i) tr += cov(i, i);
  return tr / static_cast<double>(cov.rows());
}

double loglog_slope(const std::vector<std::size_t>& t, const Vector& values, std::size_t lo, std::size_t hi) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t g = 0; g < t.size(); ++g) {
    if (t[g] < lo || t[g] > hi) continue;
    if (!(values[g] > 0.0)) throw NumericalFailure("loglog_slope: non-positive value at t=" + std::to_string(t[g]));
    const double x = std::log(static_cast<double>(t[g]));
    const double y = std::log(values[g]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) throw ContractViolation("loglog_slope: need at least two grid points in range");
  const double nn = static_cast<double>(n);
  return (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
}

void write_risk_curve_csv(std::ostream& os, const RiskCurve& curve) {
  os << "t,excess_mean,excess_ci,raw_alg,raw_oracle\n";
  for (std::size_t g = 0; g < curve.t_grid.size(); ++g)
    os << curve.t_grid[g] << ',' << format_double(curve.excess_mean[g]) << ',' << format_double(curve.excess_ci_half[g])
       << ',' << format_double(curve.raw_alg[g]) << ',' << format_double(curve.raw_oracle[g]) << '\n';
}

RiskCurve read_risk_curve_csv(std::istream& is) {
  const CsvTable table = read_csv(is);
  const std::size_t ct = table.column("t"), ce = table.column("excess_mean");
  RiskCurve c;
  auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < table.header.size(); ++i)
      if (table.header[i] == name) return i;
    return std::nullopt;
  };
  const auto ci = optional_col("excess_ci"), ra = optional_col("raw_alg"), ro = optional_col("raw_oracle");
  for (const auto& row : table.rows) {
    if (!(row[ct] >= 0.0)) throw ConfigError("risk curve: negative t");
    c.t_grid.push_back(static_cast<std::size_t>(row[ct]));
    c.excess_mean.push_back(row[ce]);
    c.excess_ci_half.push_back(ci ? row[*ci] : 0.0);
    c.raw_alg.push_back(ra ? row[*ra] : row[ce]);
    c.raw_oracle.push_back(ro ? row[*ro] : 0.0);
  }
  if (!std::is_sorted(c.t_grid.begin(), c.t_grid.end())) throw ConfigError("risk curve: t must be increasing");
  return c;
}

void write_burn_in_csv(std::ostream& os, const std::vector<BurnInReport>& reports) {
  os << "epsilon,t_star,uniform_checked_to\n";
  for (const auto& r : reports)
    os << format_double(r.epsilon) << ',' << (r.t_star ? std::to_string(*r.t_star) : std::string("inf")) << ','
       << r.uniform_checked_to << '\n';
}

void write_filter_count_csv(std::ostream& os, const FilterCountReport& report) {
  os << "m,terminal_excess,excess_ci,achieved\n";
  for (const auto& row : report.table)
    os << row.m << ',' << format_double(row.terminal_excess) << ',' << format_double(row.ci_half) << ','
       << (row.terminal_excess <= report.epsilon ? 1 : 0) << '\n';
}

void write_bias_variance_csv(std::ostream& os, const BiasVarianceReport& report) {
  os << "t,bias,bias_ci,variance,variance_ci\n";
  for (std::size_t g = 0; g < report.bias.t_grid.size(); ++g)
    os << report.bias.t_grid[g] << ',' << format_double(report.bias.excess_mean[g]) << ','
       << format_double(report.bias.excess_ci_half[g]) << ',' << format_double(report.variance.excess_mean[g]) << ','
       << format_double(report.variance.excess_ci_half[g]) << '\n';
}

}  // namespace dynolearn
