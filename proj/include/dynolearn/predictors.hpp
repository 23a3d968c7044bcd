#pragma once

#include <memory>
#include <optional>

#include "dynolearn/online.hpp"
#include "dynolearn/spectral.hpp"

namespace dynolearn {

struct ReadoutOptions {
  // Ridge term is reg_scale · steps_seen, so it scales with the Gram matrix.
  double reg_scale = 1e-6;
  std::size_t refit_period = 16;
};

// Spectral filtering learner: fixed Hilbert filters, least-squares linear
// readout refit every `refit_period` observed pairs. It never holds an
// estimate of the system matrices or the latent state; its whole state is
// the bank, the history window, the normal-equation accumulators and w.
class SpectralPredictor final : public OnlinePredictor {
 public:
  SpectralPredictor(std::shared_ptr<const FilterBank> bank, std::size_t obs_dim, ReadoutOptions options = {});

  // Readout frozen at `weights` (feature_dim × obs_dim); observe() only
  // updates the history.
  static SpectralPredictor with_fixed_readout(std::shared_ptr<const FilterBank> bank, std::size_t obs_dim,
                                              Matrix weights);

  Vector predict() const override;
  void observe(const Vector& y) override;
  void advance(const Vector& y) override { history_.push(y); }
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<SpectralPredictor>(*this); }
  std::string name() const override { return "spectral"; }

  // Accumulates one (z, y_next) pair directly, bypassing the history.
  void observe_pair(std::span<const double> z, std::span<const double> y_next);
  // Solves the accumulated system now. Keeps the previous weights when the
  // unregularized system is singular.
  void refit();

  Vector current_features() const { return features(*bank_, history_, obs_dim_); }
  Vector predict_from(std::span<const double> z) const;

  const FilterBank& bank() const { return *bank_; }
  const Matrix& gram() const { return gram_; }
  const Matrix& moment() const { return moment_; }
  const Matrix& weights() const { return w_; }
  std::size_t steps_seen() const { return steps_seen_; }
  std::size_t feature_dim() const { return gram_.rows(); }
  bool fitted() const { return fitted_; }
  double current_reg() const;
  // Number of scalars of learner state (accumulators, weights, window).
  std::size_t state_size() const;

 private:
  std::shared_ptr<const FilterBank> bank_;
  std::size_t obs_dim_;
  ReadoutOptions options_;
  HistoryWindow history_;
  Matrix gram_;
  Matrix moment_;
  Matrix w_;
  std::size_t steps_seen_ = 0;
  bool fitted_ = false;
  bool frozen_ = false;
};

class ZeroPredictor final : public OnlinePredictor {
 public:
  explicit ZeroPredictor(std::size_t obs_dim) : obs_dim_(obs_dim) {}
  Vector predict() const override { return Vector(obs_dim_, 0.0); }
  void observe(const Vector&) override {}
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<ZeroPredictor>(*this); }
  std::string name() const override { return "zero"; }

 private:
  std::size_t obs_dim_;
};

class LastValuePredictor final : public OnlinePredictor {
 public:
  explicit LastValuePredictor(std::size_t obs_dim) : last_(obs_dim, 0.0) {}
  Vector predict() const override { return last_; }
  void observe(const Vector& y) override { last_ = y; }
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<LastValuePredictor>(*this); }
  std::string name() const override { return "last_value"; }

 private:
  Vector last_;
};

// AR(k): least squares on the lag vector (y_t, ..., y_{t-k+1}), zero padded,
// with the same refit discipline as the spectral learner.
class ArPredictor final : public OnlinePredictor {
 public:
  ArPredictor(std::size_t order, std::size_t obs_dim, ReadoutOptions options = {});

  Vector predict() const override;
  void observe(const Vector& y) override;
  void advance(const Vector& y) override { history_.push(y); }
  std::unique_ptr<OnlinePredictor> clone() const override { return std::make_unique<ArPredictor>(*this); }
  std::string name() const override { return "ar(" + std::to_string(order_) + ")"; }

  void refit();
  Vector lag_vector() const;
  const Matrix& weights() const { return w_; }
  const Matrix& gram() const { return gram_; }
  std::size_t order() const { return order_; }

 private:
  std::size_t order_;
  std::size_t obs_dim_;
  ReadoutOptions options_;
  HistoryWindow history_;
  Matrix gram_;
  Matrix moment_;
  Matrix w_;
  std::size_t steps_seen_ = 0;
  bool fitted_ = false;
};

}  // namespace dynolearn
