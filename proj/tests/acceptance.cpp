// Acceptance run: one PASS/FAIL line per criterion.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "dynolearn/cli.hpp"
#include "dynolearn/config.hpp"
#include "dynolearn/errors.hpp"
#include "dynolearn/learnability.hpp"
#include "dynolearn/numerics.hpp"
#include "dynolearn/oracles.hpp"
#include "dynolearn/predictors.hpp"
#include "dynolearn/rng.hpp"
#include "dynolearn/spectral.hpp"
#include "dynolearn/systems.hpp"

using namespace dynolearn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string sci(double v) { return fmt("%.3g", v); }

double slope_of(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

LdsSpec scalar_lds(double a) {
  LdsSpec s;
  s.A = Matrix{{a}};
  s.C = Matrix{{1.0}};
  s.noise.kind = NoiseKind::gaussian;
  s.noise.stdev_process = {0.1};
  s.noise.stdev_obs = {0.1};
  s.init.kind = InitPolicy::Kind::ball_grid;
  s.init.radius = 1.0;
  s.init.points = 8;
  s.symmetric = true;
  return s;
}

Matrix random_orthogonal(std::size_t d, std::uint64_t seed) {
  GaussianStream g{SeededRng(seed)};
  Matrix m(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) m(i, j) = m(j, i) = g.next();
  return sym_eig(m).vectors;
}

Matrix with_spectrum(const Matrix& v, const Vector& lambda) {
  const std::size_t d = lambda.size();
  Matrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += v(i, k) * lambda[k] * v(j, k);
      a(i, j) = s;
    }
  symmetrize(a);
  return a;
}

LdsSpec random_symmetric_lds(std::size_t d, double lo, double hi, std::uint64_t seed, bool spread) {
  LdsSpec s = scalar_lds(0.0);
  SeededRng rng(seed);
  Vector lambda(d);
  for (std::size_t i = 0; i < d; ++i)
    lambda[i] = spread ? (d == 1 ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(d - 1))
                       : lo + (hi - lo) * rng.uniform();
  s.A = with_spectrum(random_orthogonal(d, rng.child_seed(1)), lambda);
  GaussianStream g(rng.split(2));
  Vector c(d);
  for (double& x : c) x = g.next();
  const double n = norm2(c);
  for (double& x : c) x /= n;
  s.C = Matrix::row(c);
  s.noise.stdev_process = {0.1};
  s.noise.stdev_obs = {0.1};
  return s;
}

HarnessConfig harness(std::vector<std::size_t> grid, std::size_t n_traj, std::size_t window = 16) {
  HarnessConfig h;
  h.t_grid = std::move(grid);
  h.n_traj = n_traj;
  h.window = window;
  h.master_seed = 20240601;
  h.threads = 0;
  return h;
}

std::vector<double> hilbert_spectrum_slope_window(std::size_t window) {
  const SymEig e = sym_eig(hilbert_matrix(window));
  return {e.values.begin(), e.values.end()};
}

// 1
Outcome hilbert_decay() {
  Outcome o{true, ""};
  for (std::size_t t : {256u, 64u}) {
    const auto mu = hilbert_spectrum_slope_window(t);
    std::vector<double> x, y;
    for (std::size_t i = 2; i <= 12; ++i) {
      x.push_back(static_cast<double>(i));
      y.push_back(std::log(mu[i - 1]));
    }
    const double slope = slope_of(x, y);
    const double target = -std::numbers::pi * std::numbers::pi / (2.0 * std::log(static_cast<double>(t)));
    const bool ok = std::abs(slope - target) <= 0.35 * std::abs(target);
    o.pass = o.pass && ok;
    o.detail += "T_w=" + std::to_string(t) + " slope=" + fmt("%.4f", slope) + " target=" + fmt("%.4f", target) + " ";
  }
  return o;
}

// 2
Outcome orthonormality() {
  Outcome o{true, ""};
  for (auto [t, m] : std::vector<std::pair<std::size_t, std::size_t>>{{64, 12}, {256, 20}}) {
    const FilterBank bank = build_filter_bank(t, m);
    const Matrix g = transpose_times(bank.phis, bank.phis);
    const double err = (g - Matrix::identity(m)).max_abs();
    o.pass = o.pass && err <= 1e-8;
    o.detail += "(" + std::to_string(t) + "," + std::to_string(m) + ") max|PhiTPhi-I|=" + sci(err) + " ";
  }
  return o;
}

// 3
Outcome mean_residual_identity() {
  const FilterBank bank = build_filter_bank(100, 10);
  const std::size_t n = 1000;
  Vector avg(bank.m, 0.0);
  Vector v(bank.window);
  for (std::size_t q = 0; q < n; ++q) {
    const double lambda = (static_cast<double>(q) + 0.5) / static_cast<double>(n);
    double p = 1.0;
    for (double& x : v) {
      x = p;
      p *= lambda;
    }
    for (std::size_t i = 0; i < bank.m; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < bank.window; ++k) s += v[k] * bank.phis(k, i);
      avg[i] += s * s / static_cast<double>(n);
    }
  }
  double worst = 0.0;
  std::size_t at = 0;
  for (std::size_t i = 0; i < bank.m; ++i)
    if (std::abs(avg[i] - bank.mus[i]) > worst) {
      worst = std::abs(avg[i] - bank.mus[i]);
      at = i + 1;
    }
  return {worst <= 1e-6, "max|quad-mu_i| over i<=10 = " + sci(worst) + " at i=" + std::to_string(at)};
}

// 4
Outcome approximation_adequacy() {
  const FilterBank bank = build_filter_bank(100, 20);
  double mean = 0.0;
  for (int i = 0; i < 100; ++i) mean += residual_energy(bank, i / 100.0) / 100.0;
  return {mean <= 1e-5, "mean residual=" + sci(mean)};
}

// 5
Outcome kalman_validation() {
  Outcome o{true, ""};
  const double a = 0.9, q = 0.01, r = 0.01;
  const double b = r - a * a * r - q;
  const double closed = (-b + std::sqrt(b * b + 4.0 * q * r)) / 2.0;
  const KalmanGainSchedule sched(scalar_lds(a));
  const double p = sched.steady_covariance()(0, 0);
  const double err = std::abs(p - closed);
  o.pass = err <= 1e-10;
  o.detail = "riccati |p-p*|=" + sci(err) + "; ";

  const std::vector<PredictorConfig> rivals{PredictorConfig::spectral(100, 15), PredictorConfig::of(PredictorKind::kernel),
                                            PredictorConfig::of(PredictorKind::last_value), PredictorConfig::ar(1),
                                            PredictorConfig::ar(5), PredictorConfig::of(PredictorKind::zero)};
  for (std::size_t d : {1u, 2u, 5u}) {
    const LdsSpec spec = random_symmetric_lds(d, -0.9, 0.9, 1000 + d, false);
    double worst = 1e300;
    std::string worst_name;
    for (const auto& rival : rivals) {
      const RiskCurve c = estimate_excess_risk(spec, rival, OracleKind::kalman, harness(log_grid(10, 1000, 8), 200));
      for (std::size_t g = 0; g < c.t_grid.size(); ++g) {
        const double z = c.excess_mean[g] + c.excess_ci_half[g];
        if (z < worst) {
          worst = z;
          worst_name = describe(rival) + "@t=" + std::to_string(c.t_grid[g]);
        }
      }
    }
    o.pass = o.pass && worst >= 0.0;
    o.detail += "d=" + std::to_string(d) + " min(excess+ci)=" + sci(worst) + " (" + worst_name + ") ";
  }
  return o;
}

// 6
Outcome learnability_check(const LdsSpec& spec, bool with_burn_in) {
  const auto h = harness(log_grid(10, 2000, 16), 200);
  const RiskCurve c = estimate_excess_risk(spec, PredictorConfig::spectral(100, 15), OracleKind::kalman, h);
  Outcome o;
  double slope = 0.0;
  try {
    slope = loglog_slope(c.t_grid, c.excess_mean, 100, 2000);
  } catch (const Error& e) {
    return {false, std::string("slope undefined: ") + e.what()};
  }
  o.pass = slope >= -1.4 && slope <= -0.6;
  o.detail = "(a) slope=" + fmt("%.3f", slope);
  if (!with_burn_in) return o;
  const double eps = 0.05 * stationary_signal_power(spec);
  const BurnInReport b = burn_in_time(c, eps);
  o.detail += " (b) eps=" + sci(eps);
  if (!b.t_star) {
    o.pass = false;
    o.detail += " t_star=inf";
    return o;
  }
  const RiskCurve late =
      estimate_excess_risk(spec, PredictorConfig::spectral(100, 15), OracleKind::kalman, harness({2 * *b.t_star, 4 * *b.t_star}, 200));
  const bool ok = late.excess_mean[0] <= eps && late.excess_mean[1] <= eps;
  o.pass = o.pass && ok;
  o.detail += " t_star=" + std::to_string(*b.t_star) + " excess(2t*)=" + sci(late.excess_mean[0]) +
              " excess(4t*)=" + sci(late.excess_mean[1]);
  return o;
}

// 7
Outcome persistent_excitation() {
  LdsSpec spec = scalar_lds(0.9);
  spec.init = InitPolicy::stationary();
  auto bank = std::make_shared<const FilterBank>(build_filter_bank(100, 15));
  const std::uint64_t seed = 77;
  const Vector x0 = resolve_initial_state(spec, initial_conditions(spec.init, 1).front(), seed);
  const Trajectory traj = simulate_lds(spec, 5001, x0, seed, false);
  SpectralPredictor pred(bank, 1);
  const auto grid = log_grid(500, 5000, 12);
  std::vector<double> ratio;
  std::size_t g = 0;
  for (std::size_t t = 0; t < traj.horizon() && g < grid.size(); ++t) {
    pred.observe(traj.ys[t]);
    if (pred.steps_seen() == grid[g]) {
      ratio.push_back(sym_eig(pred.gram()).values.back() / static_cast<double>(grid[g]));
      ++g;
    }
  }
  std::vector<double> sorted = ratio;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double lo = sorted.front();
  return {lo > 0.0 && lo >= 0.5 * median, "min ratio=" + sci(lo) + " median=" + sci(median)};
}

// 8
Outcome dimension_independence() {
  Outcome o{true, ""};
  std::vector<double> terminal;
  std::vector<std::size_t> sizes;
  for (std::size_t d : {2u, 20u, 100u}) {
    const LdsSpec spec = random_symmetric_lds(d, 0.0, 0.95, 500 + d, true);
    const RiskCurve c = estimate_excess_risk(spec, PredictorConfig::spectral(100, 20), OracleKind::kalman,
                                             harness({250, 500, 1000}, 100, 128));
    terminal.push_back(c.excess_mean.back());
    PredictorFactory f(spec, PredictorConfig::spectral(100, 20));
    const Trajectory dummy = simulate(spec, 1, Vector(d, 0.0), 0, false);
    sizes.push_back(dynamic_cast<const SpectralPredictor&>(*f.make(dummy)).state_size());
    o.detail += "d=" + std::to_string(d) + " excess=" + sci(terminal.back()) + " state=" + std::to_string(sizes.back()) + " ";
  }
  const double hi = *std::max_element(terminal.begin(), terminal.end());
  const double lo = *std::min_element(terminal.begin(), terminal.end());
  o.pass = lo > 0.0 && hi <= 3.0 * lo && std::all_of(sizes.begin(), sizes.end(), [&](auto s) { return s == sizes[0]; });
  o.detail += "ratio=" + fmt("%.2f", hi / lo);
  return o;
}

// 9
Outcome lorenz_obstruction() {
  LorenzSpec spec;
  const std::size_t horizon = 5000;
  const Vector x0{1.0, 1.0, 1.0};
  const Trajectory traj = simulate_lorenz(spec, horizon + 64, x0, 0, false);
  double power = 0.0;
  for (const auto& y : traj.ys) power += y[0] * y[0];
  power /= static_cast<double>(traj.horizon());

  const RiskCurve c = estimate_excess_risk(spec, PredictorConfig::spectral(100, 15), OracleKind::truth,
                                           harness({horizon - 16}, 2));
  const double one_step = c.raw_alg.back();

  SpectralPredictor pred(std::make_shared<const FilterBank>(build_filter_bank(100, 15)), 1);
  double err1 = 0.0, err50 = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t + 50 < traj.horizon(); ++t) {
    if (t >= horizon - 1000 && t % 10 == 0) {
      const double e1 = pred.predict()[0] - traj.ys[t][0];
      const double e50 = predict_ahead(pred, 50)[0] - traj.ys[t + 49][0];
      err1 += e1 * e1;
      err50 += e50 * e50;
      ++n;
    }
    pred.observe(traj.ys[t]);
  }
  err1 /= static_cast<double>(n);
  err50 /= static_cast<double>(n);

  // Separation of a 1e-8 perturbation, started on the attractor.
  Vector a{1.0, 1.0, 1.0};
  for (int i = 0; i < 1000; ++i) a = lorenz_rk4_step(spec, a);
  Vector b = a;
  b[0] += 1e-8;
  double reached = -1.0;
  for (std::size_t k = 1; k <= 2500; ++k) {
    a = lorenz_rk4_step(spec, a);
    b = lorenz_rk4_step(spec, b);
    Vector diff = a;
    axpy(-1.0, b, diff);
    if (norm2(diff) >= 1e-2) {
      reached = static_cast<double>(k) * spec.dt;
      break;
    }
  }
  const bool ok = one_step <= 1e-2 * power && err50 > 10.0 * err1 && reached > 0.0;
  return {ok, "one-step raw=" + sci(one_step) + " signal=" + sci(power) + " iter50/iter1=" + sci(err50 / err1) +
                  " separation 1e-2 at t=" + (reached > 0 ? fmt("%.2f", reached) : std::string("never"))};
}

// 10
Outcome closed_loop() {
  Outcome o;
  LdsSpec open = random_symmetric_lds(3, 0.0, 0.9, 31, true);
  LdsSpec closed = open;
  closed.B = Matrix(3, 1);
  closed.K = Matrix{{0.3, -0.2, 0.1}};
  const Vector x0{0.5, -0.25, 1.0};
  const Trajectory t_open = simulate_lds(open, 5000, x0, 11);
  const Trajectory t_closed = simulate_closed_loop(closed, 5000, x0, 11);
  const bool same = t_open.ys == t_closed.ys && *t_open.xs == *t_closed.xs;

  LdsSpec loop = scalar_lds(1.2);
  loop.symmetric = false;
  loop.B = Matrix{{1.0}};
  loop.K = Matrix{{-0.3}};
  const Outcome rate = learnability_check(loop, false);
  o.pass = same && rate.pass;
  o.detail = std::string("B=0 bit-identical=") + (same ? "yes" : "no") + "; A+BK=0.9 " + rate.detail;
  return o;
}

// 11
Outcome reproducibility() {
  const fs::path root = fs::temp_directory_path() / "dynolearn_acceptance";
  fs::remove_all(root);
  std::vector<std::string> files;
  for (const char* threads : {"1", "3"}) {
    const fs::path dir = root / threads;
    std::ostringstream out, err;
    const int rc = cli::run({"risk", "-o", dir.string(), "--threads", threads}, out, err);
    if (rc != 0) return {false, "risk exited " + std::to_string(rc) + ": " + err.str()};
    std::ifstream in(dir / "risk.csv", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files.push_back(ss.str());
  }
  fs::remove_all(root);
  const bool same = files[0] == files[1] && !files[0].empty();
  return {same, std::string("risk.csv threads=1 vs threads=3 ") + (same ? "identical" : "differ") + " (" +
                    std::to_string(files[0].size()) + " bytes)"};
}

}  // namespace

// Usage: acceptance [--expect-fail=1,3]
// Criteria listed in --expect-fail still print FAIL but do not set the exit code.
int main(int argc, char** argv) {
  std::vector<int> expected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    const std::string key = "--expect-fail=";
    if (arg.rfind(key, 0) != 0) continue;
    std::stringstream ss(arg.substr(key.size()));
    for (std::string id; std::getline(ss, id, ',');) expected.push_back(std::stoi(id));
  }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "hilbert spectral decay", 1.0, hilbert_decay},
      {2, "filter-bank orthonormality", 1.0, orthonormality},
      {3, "mean-residual identity", 0.0, mean_residual_identity},
      {4, "approximation adequacy", 0.0, approximation_adequacy},
      {5, "kalman validation", 0.0, kalman_validation},
      {6, "dynamic learnability, scalar LDS", 120.0, [] { return learnability_check(scalar_lds(0.9), true); }},
      {7, "persistent excitation", 0.0, persistent_excitation},
      {8, "dimension independence", 0.0, dimension_independence},
      {9, "lorenz chaos obstruction", 0.0, lorenz_obstruction},
      {10, "closed-loop equivalence", 0.0, closed_loop},
      {11, "end-to-end reproducibility", 0.0, reproducibility},
  };
  int failures = 0;
  int unexpected = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += " over runtime budget";
    }
    const bool known = std::find(expected.begin(), expected.end(), c.id) != expected.end();
    if (!o.pass) {
      ++failures;
      if (!known) ++unexpected;
    }
    std::printf("criterion %2d %s: %s | %s | %.2fs%s\n", c.id, o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str(), secs,
                !o.pass && known ? " (known)" : "");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return unexpected == 0 ? 0 : 1;
}
