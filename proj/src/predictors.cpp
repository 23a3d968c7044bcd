#include "dynolearn/predictors.hpp"

#include <algorithm>

#include "dynolearn/errors.hpp"

namespace dynolearn {

Vector predict_ahead(const OnlinePredictor& predictor, std::size_t steps) {
  if (steps == 0) throw ContractViolation("predict_ahead: steps must be >= 1");
  if (steps == 1) return predictor.predict();
  auto rollout = predictor.clone();
  Vector yhat = rollout->predict();
  for (std::size_t s = 1; s < steps; ++s) {
    rollout->advance(yhat);
    yhat = rollout->predict();
  }
  return yhat;
}

namespace {

void accumulate(Matrix& gram, Matrix& moment, std::span<const double> z, std::span<const double> y) {
  const std::size_t f = z.size();
  for (std::size_t i = 0; i < f; ++i) {
    const double zi = z[i];
    if (zi == 0.0) continue;
    double* grow = gram.row_span(i).data();
    for (std::size_t j = 0; j < f; ++j) grow[j] += zi * z[j];
    double* mrow = moment.row_span(i).data();
    for (std::size_t c = 0; c < y.size(); ++c) mrow[c] += zi * y[c];
  }
}

Vector apply_readout(const Matrix& w, std::span<const double> z) {
  Vector out(w.cols(), 0.0);
  for (std::size_t f = 0; f < z.size(); ++f) {
    if (z[f] == 0.0) continue;
    axpy(z[f], w.row_span(f), out);
  }
  return out;
}

// Returns false (and leaves `w` alone) if the unregularized system is singular.
bool solve_readout(const Matrix& gram, const Matrix& moment, double reg, Matrix& w) {
  try {
    w = solve_regularized(gram, moment, reg);
    return true;
  } catch (const SingularSystemError&) {
    if (reg > 0.0) throw;
    return false;
  }
}

}  // namespace

SpectralPredictor::SpectralPredictor(std::shared_ptr<const FilterBank> bank, std::size_t obs_dim,
                                     ReadoutOptions options)
    : bank_(std::move(bank)), obs_dim_(obs_dim), options_(options), history_(bank_->window) {
  if (obs_dim == 0) throw ContractViolation("SpectralPredictor: obs_dim must be >= 1");
  if (options.refit_period == 0) throw ContractViolation("SpectralPredictor: refit_period must be >= 1");
  if (!(options.reg_scale >= 0.0)) throw ContractViolation("SpectralPredictor: reg_scale must be >= 0");
  const std::size_t f = bank_->feature_dim(obs_dim);
  gram_ = Matrix(f, f);
  moment_ = Matrix(f, obs_dim);
  w_ = Matrix(f, obs_dim);
}

SpectralPredictor SpectralPredictor::with_fixed_readout(std::shared_ptr<const FilterBank> bank, std::size_t obs_dim,
                                                        Matrix weights) {
  SpectralPredictor p(std::move(bank), obs_dim);
  if (weights.rows() != p.feature_dim() || weights.cols() != obs_dim)
    throw ContractViolation("with_fixed_readout: weights shape mismatch");
  p.w_ = std::move(weights);
  p.fitted_ = true;
  p.frozen_ = true;
  return p;
}

Vector SpectralPredictor::predict() const {
  if (!fitted_) return Vector(obs_dim_, 0.0);
  return apply_readout(w_, current_features());
}

Vector SpectralPredictor::predict_from(std::span<const double> z) const {
  if (!fitted_) return Vector(obs_dim_, 0.0);
  return apply_readout(w_, z);
}

void SpectralPredictor::observe(const Vector& y) {
  if (y.size() != obs_dim_) throw ContractViolation("SpectralPredictor: observation dimension mismatch");
  if (!frozen_ && !history_.empty()) observe_pair(current_features(), y);
  history_.push(y);
}

void SpectralPredictor::observe_pair(std::span<const double> z, std::span<const double> y_next) {
  if (z.size() != feature_dim() || y_next.size() != obs_dim_) throw ContractViolation("observe_pair: shape mismatch");
  if (!all_finite(y_next)) throw ContractViolation("observe_pair: non-finite observation");
  accumulate(gram_, moment_, z, y_next);
  ++steps_seen_;
  if (steps_seen_ % options_.refit_period == 0) refit();
}

double SpectralPredictor::current_reg() const {
  return options_.reg_scale * static_cast<double>(std::max<std::size_t>(steps_seen_, 1));
}

void SpectralPredictor::refit() {
  if (frozen_ || steps_seen_ == 0) return;
  if (solve_readout(gram_, moment_, current_reg(), w_)) fitted_ = true;
}

std::size_t SpectralPredictor::state_size() const {
  return gram_.rows() * gram_.cols() + moment_.rows() * moment_.cols() + w_.rows() * w_.cols() +
         history_.capacity() * obs_dim_;
}

ArPredictor::ArPredictor(std::size_t order, std::size_t obs_dim, ReadoutOptions options)
    : order_(order), obs_dim_(obs_dim), options_(options), history_(order) {
  if (order == 0) throw ContractViolation("ArPredictor: order must be >= 1");
  if (options.refit_period == 0) throw ContractViolation("ArPredictor: refit_period must be >= 1");
  const std::size_t f = order * obs_dim;
  gram_ = Matrix(f, f);
  moment_ = Matrix(f, obs_dim);
  w_ = Matrix(f, obs_dim);
}

Vector ArPredictor::lag_vector() const {
  Vector z(order_ * obs_dim_, 0.0);
  for (std::size_t k = 0; k < history_.size(); ++k)
    std::copy(history_.newest(k).begin(), history_.newest(k).end(), z.begin() + static_cast<std::ptrdiff_t>(k * obs_dim_));
  return z;
}

Vector ArPredictor::predict() const {
  if (!fitted_) return Vector(obs_dim_, 0.0);
  return apply_readout(w_, lag_vector());
}

void ArPredictor::observe(const Vector& y) {
  if (y.size() != obs_dim_) throw ContractViolation("ArPredictor: observation dimension mismatch");
  if (!history_.empty()) {
    accumulate(gram_, moment_, lag_vector(), y);
    ++steps_seen_;
    if (steps_seen_ % options_.refit_period == 0) refit();
  }
  history_.push(y);
}

void ArPredictor::refit() {
  if (steps_seen_ == 0) return;
  const double reg = options_.reg_scale * static_cast<double>(steps_seen_);
  if (solve_readout(gram_, moment_, reg, w_)) fitted_ = true;
}

}  // namespace dynolearn
