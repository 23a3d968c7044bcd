#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dynolearn/online.hpp"
#include "dynolearn/systems.hpp"

namespace dynolearn {

// Predictive (prior) mean and covariance of the latent state.
struct KalmanState {
  Vector xhat;
  Matrix P;
};

struct KalmanStepResult {
  KalmanState state;
  Vector yhat_next;
  bool regularized = false;  // innovation covariance needed a 1e-12·I nudge
};

// Prior for the filter: zero mean, P = R²·I for grid/fixed policies (R the
// grid radius or |x0|), and the stationary covariance for stationary policies.
KalmanState kalman_prior(const LdsSpec& spec);

// Measurement update with y_t followed by the time update. The returned
// state is the prior for t+1 and yhat_next = C·xhat_{t+1|t}.
KalmanStepResult kalman_step(const LdsSpec& spec, const KalmanState& state, std::span<const double> y);

// Data-independent gain sequence of the filter, shared by every trajectory of
// one spec. Gains are recorded until the Riccati recursion reaches its fixed
// point; later steps reuse the steady-state gain.
class KalmanGainSchedule {
 public:
  explicit KalmanGainSchedule(const LdsSpec& spec, std::size_t max_steps = 100000);

  const Matrix& gain(std::size_t t) const { return t < gains_.size() ? gains_[t] : gains_.back(); }
  const Matrix& transition() const { return transition_; }
  const Matrix& observation() const { return observation_; }
  const Vector& initial_mean() const { return x0_mean_; }
  // Steady-state predictive covariance P∞ (prior).
  const Matrix& steady_covariance() const { return steady_p_; }
  std::size_t converged_after() const { return gains_.size(); }

 private:
  Matrix transition_;
  Matrix observation_;
  Vector x0_mean_;
  std::vector<Matrix> gains_;
  Matrix steady_p_;
};

class KalmanPredictor final : public OnlinePredictor {
 public:
  explicit KalmanPredictor(std::shared_ptr<const KalmanGainSchedule> schedule);

  Vector predict() const override;
  void observe(const Vector& y) override;
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<KalmanPredictor>(*this); }
  std::string name() const override { return "kalman"; }

  const Vector& state_mean() const { return xhat_; }

 private:
  std::shared_ptr<const KalmanGainSchedule> schedule_;
  Vector xhat_;
  std::size_t t_ = 0;
};

// Unrolled kernel β_k = C A^{k-1} Cᵀ, k = 1..truncation.
struct KernelOracle {
  std::vector<Matrix> betas;
  std::size_t truncation() const { return betas.size(); }
};

// Smallest K with |A|₂^K <= 1e-8, capped at 10⁴.
std::size_t default_kernel_truncation(const Matrix& a);
KernelOracle make_kernel_oracle(const LdsSpec& spec, std::size_t truncation = 0);

// Σ_k β_k y_{t+1-k} over min(truncation, history) terms; history is newest first.
Vector kernel_predict(const KernelOracle& oracle, std::span<const Vector> history);

class KernelPredictor final : public OnlinePredictor {
 public:
  explicit KernelPredictor(std::shared_ptr<const KernelOracle> oracle);

  Vector predict() const override;
  void observe(const Vector& y) override { history_.push(y); }
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<KernelPredictor>(*this); }
  std::string name() const override { return "kernel"; }

 private:
  std::shared_ptr<const KernelOracle> oracle_;
  HistoryWindow history_;
  std::size_t obs_dim_;
};

// Perfect predictions for a noiseless trajectory: entry t is the prediction
// of y_t made after observing y_0..y_{t-1}, obtained by propagating the
// recorded latent state through the noiseless dynamics. Throws
// ContractViolation on noisy systems or trajectories without latent states.
std::vector<Vector> deterministic_truth(const Trajectory& traj, const SystemSpec& system);

class TruthPredictor final : public OnlinePredictor {
 public:
  TruthPredictor(const Trajectory& traj, const SystemSpec& system);

  Vector predict() const override;
  void observe(const Vector&) override { ++t_; }
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<TruthPredictor>(*this); }
  std::string name() const override { return "truth"; }

 private:
  std::shared_ptr<const std::vector<Vector>> predictions_;
  std::size_t t_ = 0;
};

}  // namespace dynolearn
