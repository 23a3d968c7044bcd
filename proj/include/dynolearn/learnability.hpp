#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dynolearn/oracles.hpp"
#include "dynolearn/predictors.hpp"
#include "dynolearn/systems.hpp"

namespace dynolearn {

enum class PredictorKind { spectral, kalman, kernel, truth, zero, last_value, ar };

struct PredictorConfig {
  PredictorKind kind = PredictorKind::spectral;
  std::size_t window = 100;  // spectral T_w
  std::size_t m = 15;
  bool sign_augmented = false;
  ReadoutOptions readout;
  std::size_t ar_order = 1;
  std::size_t kernel_truncation = 0;  // 0 = default rule

  static PredictorConfig spectral(std::size_t window, std::size_t m) {
    PredictorConfig c;
    c.window = window;
    c.m = m;
    return c;
  }
  static PredictorConfig of(PredictorKind kind) {
    PredictorConfig c;
    c.kind = kind;
    return c;
  }
  static PredictorConfig ar(std::size_t order) {
    PredictorConfig c;
    c.kind = PredictorKind::ar;
    c.ar_order = order;
    return c;
  }
};

std::string to_string(PredictorKind kind);
// Accepts "spectral", "kalman", "kernel", "truth", "zero", "last_value", "ar".
PredictorKind parse_predictor_kind(const std::string& name);
std::string describe(const PredictorConfig& config);

// Reference predictor for excess risk. `zero` means the Bayes risk is taken
// to be zero and curves report raw risk.
enum class OracleKind { kalman, kernel, truth, zero };
std::string to_string(OracleKind kind);
OracleKind parse_oracle_kind(const std::string& name);
PredictorKind predictor_kind_of(OracleKind kind);

// Builds fresh predictor instances for trajectories of one system. Shared,
// data-independent pieces (filter bank, Kalman gains, kernel) are built once.
class PredictorFactory {
 public:
  PredictorFactory(const SystemSpec& system, const PredictorConfig& config);

  std::unique_ptr<OnlinePredictor> make(const Trajectory& traj) const;
  const PredictorConfig& config() const { return config_; }
  std::shared_ptr<const FilterBank> bank() const { return bank_; }

 private:
  SystemSpec system_;
  PredictorConfig config_;
  std::shared_ptr<const FilterBank> bank_;
  std::shared_ptr<const KalmanGainSchedule> kalman_;
  std::shared_ptr<const KernelOracle> kernel_;
};

// True when the oracle is meaningful for the system (Kalman/kernel need a
// linear system, truth needs a noiseless one).
bool oracle_applicable(OracleKind oracle, const SystemSpec& system);

struct HarnessConfig {
  std::vector<std::size_t> t_grid;
  std::size_t window = 16;     // per-step losses averaged over [t, t+window)
  std::size_t n_traj = 200;    // per admissible initial condition
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;     // 0 = hardware concurrency
  bool allow_raw_fallback = true;

  std::size_t horizon() const;
  void validate() const;
};

// Geometric grid of `points` integers from start to stop, deduplicated.
std::vector<std::size_t> log_grid(std::size_t start, std::size_t stop, std::size_t points);

struct RiskCurve {
  std::vector<std::size_t> t_grid;
  Vector excess_mean;
  Vector excess_ci_half;
  Vector raw_alg;
  Vector raw_oracle;
  std::size_t n_traj = 0;
  std::uint64_t x0_policy_digest = 0;
  std::string mode = "excess";  // "raw" when the oracle loss is taken as 0
  std::vector<std::size_t> worst_x0;  // initial-condition index per grid point
  std::vector<Vector> per_x0_excess;  // [x0][grid]
};

struct BurnInReport {
  double epsilon = 0.0;
  std::optional<std::size_t> t_star;  // nullopt = infinite
  std::size_t uniform_checked_to = 0;
};

// Excess squared loss of `algorithm` over `oracle`, worst case over the
// admissible initial conditions. Throws IncompatiblePairing when the oracle
// does not apply and raw fallback is disabled.
RiskCurve estimate_excess_risk(const SystemSpec& system, const PredictorConfig& algorithm, OracleKind oracle,
                               const HarnessConfig& harness);

// Smallest grid t after which the curve stays <= epsilon up to the horizon.
BurnInReport burn_in_time(const RiskCurve& curve, double epsilon);

struct FilterCountRow {
  std::size_t m = 0;
  double terminal_excess = 0.0;
  double ci_half = 0.0;
};

struct FilterCountReport {
  std::vector<FilterCountRow> table;
  std::optional<std::size_t> m_star;  // nullopt = no m achieved epsilon
  double epsilon = 0.0;
};

// Smallest m in `m_values` whose excess at the last grid point is <= epsilon.
// Every m runs on the same trajectories.
FilterCountReport minimal_filter_count(const SystemSpec& system, double epsilon, const std::vector<std::size_t>& m_values,
                                       const PredictorConfig& spectral_base, OracleKind oracle,
                                       const HarnessConfig& harness);

// Excess of `algorithm` over the per-t best member of `baselines`.
RiskCurve agnostic_gap(const SystemSpec& system, const PredictorConfig& algorithm,
                       const std::vector<PredictorConfig>& baselines, const HarnessConfig& harness);

struct BiasVarianceReport {
  RiskCurve bias;      // E[(w*ᵀz - Kalman prediction)²]
  RiskCurve variance;  // E[((ŵ_t - w*)ᵀz)²]
  Matrix w_star;
};

// w* is fit by ridge on one reference run `reference_multiplier` times the
// harness horizon long. Requires a linear system.
BiasVarianceReport bias_variance_split(const SystemSpec& system, const PredictorConfig& spectral,
                                       const HarnessConfig& harness, std::size_t reference_multiplier = 10);

// Stationary mean of |y|²/p for a stable linear system.
double stationary_signal_power(const LdsSpec& spec);

// Least-squares slope of ln(value) on ln(t) over grid points with lo <= t <= hi.
double loglog_slope(const std::vector<std::size_t>& t, const Vector& values, std::size_t lo, std::size_t hi);

void write_risk_curve_csv(std::ostream& os, const RiskCurve& curve);
RiskCurve read_risk_curve_csv(std::istream& is);
void write_burn_in_csv(std::ostream& os, const std::vector<BurnInReport>& reports);
void write_filter_count_csv(std::ostream& os, const FilterCountReport& report);
void write_bias_variance_csv(std::ostream& os, const BiasVarianceReport& report);

// Deterministic parallel loop over [0, n). Exceptions from workers are
// rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body);

}  // namespace dynolearn
