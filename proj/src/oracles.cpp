#include "dynolearn/oracles.hpp"

#include <algorithm>
#include <cmath>

#include "dynolearn/errors.hpp"

namespace dynolearn {

namespace {

struct MeasurementUpdate {
  Vector xhat;
  Matrix P;
  Matrix gain;  // d×p
  bool regularized = false;
};

// Joseph-form update, keeps P symmetric PSD under rounding.
MeasurementUpdate measurement_update(const Matrix& c, const Matrix& r, const Vector& xhat, const Matrix& p,
                                     std::span<const double> y) {
  const std::size_t d = p.rows();
  const Matrix pct = p * c.transpose();  // d×p
  Matrix s = c * pct + r;
  symmetrize(s);
  MeasurementUpdate out;
  Matrix chol;
  try {
    chol = cholesky(s);
  } catch (const SingularSystemError&) {
    for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) += 1e-12;
    chol = cholesky(s);
    out.regularized = true;
  }
  // gain = P Cᵀ S⁻¹, solved as S gainᵀ = C P.
  out.gain = cholesky_solve(chol, pct.transpose()).transpose();

  Vector innov(y.begin(), y.end());
  const Vector cx = c * xhat;
  for (std::size_t i = 0; i < innov.size(); ++i) innov[i] -= cx[i];
  out.xhat = xhat;
  const Vector corr = out.gain * innov;
  for (std::size_t i = 0; i < d; ++i) out.xhat[i] += corr[i];

  Matrix ikc = Matrix::identity(d) - out.gain * c;
  out.P = ikc * p * ikc.transpose() + out.gain * r * out.gain.transpose();
  symmetrize(out.P);
  return out;
}

Matrix time_update_covariance(const Matrix& m, const Matrix& p, const Matrix& q) {
  Matrix next = m * p * m.transpose() + q;
  symmetrize(next);
  return next;
}

}  // namespace

KalmanState kalman_prior(const LdsSpec& spec) {
  const std::size_t d = spec.state_dim();
  KalmanState s{Vector(d, 0.0), Matrix(d, d)};
  switch (spec.init.kind) {
    case InitPolicy::Kind::stationary:
      s.P = stationary_covariance(spec.transition(), spec.process_covariance());
      break;
    case InitPolicy::Kind::ball_grid:
      s.P = Matrix::identity(d) * (spec.init.radius * spec.init.radius);
      break;
    case InitPolicy::Kind::fixed: {
      const double r = norm2(spec.init.x0);
      s.P = Matrix::identity(d) * (r > 0.0 ? r * r : 1.0);
      break;
    }
  }
  return s;
}

KalmanStepResult kalman_step(const LdsSpec& spec, const KalmanState& state, std::span<const double> y) {
  if (state.xhat.size() != spec.state_dim() || state.P.rows() != spec.state_dim())
    throw ContractViolation("kalman_step: state dimension mismatch");
  if (y.size() != spec.obs_dim()) throw ContractViolation("kalman_step: observation dimension mismatch");
  const Matrix m = spec.transition();
  MeasurementUpdate upd = measurement_update(spec.C, spec.obs_covariance(), state.xhat, state.P, y);
  KalmanStepResult out;
  out.regularized = upd.regularized;
  out.state.xhat = m * upd.xhat;
  out.state.P = time_update_covariance(m, upd.P, spec.process_covariance());
  out.yhat_next = spec.C * out.state.xhat;
  return out;
}

KalmanGainSchedule::KalmanGainSchedule(const LdsSpec& spec, std::size_t max_steps)
    : transition_(spec.transition()), observation_(spec.C) {
  spec.validate();
  KalmanState prior = kalman_prior(spec);
  x0_mean_ = prior.xhat;
  const Matrix r = spec.obs_covariance();
  const Matrix q = spec.process_covariance();
  Matrix p = prior.P;
  const Vector zero_y(spec.obs_dim(), 0.0);
  for (std::size_t t = 0; t < max_steps; ++t) {
    MeasurementUpdate upd = measurement_update(observation_, r, prior.xhat, p, zero_y);
    Matrix next = time_update_covariance(transition_, upd.P, q);
    const bool same_gain = !gains_.empty() && (upd.gain - gains_.back()).max_abs() <= 1e-15 * (1.0 + upd.gain.max_abs());
    const double change = (next - p).max_abs();
    gains_.push_back(std::move(upd.gain));
    p = std::move(next);
    if (same_gain && change <= 1e-14 * (1e-300 + p.max_abs())) break;
  }
  steady_p_ = p;
}

KalmanPredictor::KalmanPredictor(std::shared_ptr<const KalmanGainSchedule> schedule)
    : schedule_(std::move(schedule)), xhat_(schedule_->initial_mean()) {}

Vector KalmanPredictor::predict() const { return schedule_->observation() * xhat_; }

void KalmanPredictor::observe(const Vector& y) {
  const Matrix& c = schedule_->observation();
  Vector innov = y;
  const Vector cx = c * xhat_;
  for (std::size_t i = 0; i < innov.size(); ++i) innov[i] -= cx[i];
  Vector post = xhat_;
  axpy(1.0, schedule_->gain(t_) * innov, post);
  xhat_ = schedule_->transition() * post;
  ++t_;
}

std::size_t default_kernel_truncation(const Matrix& a) {
  const double norm = spectral_norm(a);
  if (norm == 0.0) return 1;
  if (norm >= 1.0) return 10000;
  const double k = std::ceil(std::log(1e-8) / std::log(norm));
  return static_cast<std::size_t>(std::clamp(k, 1.0, 10000.0));
}

KernelOracle make_kernel_oracle(const LdsSpec& spec, std::size_t truncation) {
  spec.validate();
  const Matrix m = spec.transition();
  if (truncation == 0) truncation = default_kernel_truncation(m);
  KernelOracle oracle;
  oracle.betas.reserve(truncation);
  // C A^{k-1} is carried forward so each β_k costs one multiply.
  Matrix cpow = spec.C;
  const Matrix ct = spec.C.transpose();
  for (std::size_t k = 0; k < truncation; ++k) {
    oracle.betas.push_back(cpow * ct);
    cpow = cpow * m;
  }
  return oracle;
}

Vector kernel_predict(const KernelOracle& oracle, std::span<const Vector> history) {
  if (history.empty()) throw ContractViolation("kernel_predict: history must be non-empty");
  const std::size_t p = history.front().size();
  Vector out(p, 0.0);
  const std::size_t n = std::min(oracle.truncation(), history.size());
  for (std::size_t k = 0; k < n; ++k) axpy(1.0, oracle.betas[k] * history[k], out);
  return out;
}

KernelPredictor::KernelPredictor(std::shared_ptr<const KernelOracle> oracle)
    : oracle_(std::move(oracle)), history_(oracle_->truncation()), obs_dim_(oracle_->betas.front().rows()) {}

Vector KernelPredictor::predict() const {
  if (history_.empty()) return Vector(obs_dim_, 0.0);
  Vector out(obs_dim_, 0.0);
  for (std::size_t k = 0; k < history_.size(); ++k) axpy(1.0, oracle_->betas[k] * history_.newest(k), out);
  return out;
}

std::vector<Vector> deterministic_truth(const Trajectory& traj, const SystemSpec& system) {
  if (!is_noiseless(system)) throw ContractViolation("deterministic_truth: system is noisy, Bayes risk is not zero");
  if (!traj.xs) throw ContractViolation("deterministic_truth: trajectory has no latent states");
  const auto& xs = *traj.xs;
  std::vector<Vector> out;
  out.reserve(xs.size());
  if (const auto* lds = std::get_if<LdsSpec>(&system)) {
    const Matrix m = lds->transition();
    out.push_back(lds->C * xs.front());
    for (std::size_t t = 1; t < xs.size(); ++t) out.push_back(lds->C * (m * xs[t - 1]));
  } else {
    const auto& lz = std::get<LorenzSpec>(system);
    out.push_back(lorenz_observe(lz, xs.front()));
    for (std::size_t t = 1; t < xs.size(); ++t) out.push_back(lorenz_observe(lz, lorenz_rk4_step(lz, xs[t - 1])));
  }
  return out;
}

TruthPredictor::TruthPredictor(const Trajectory& traj, const SystemSpec& system)
    : predictions_(std::make_shared<const std::vector<Vector>>(deterministic_truth(traj, system))) {}

Vector TruthPredictor::predict() const {
  return (*predictions_)[std::min(t_, predictions_->size() - 1)];
}

}  // namespace dynolearn
