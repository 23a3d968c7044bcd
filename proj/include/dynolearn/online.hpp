#pragma once

#include <cstddef>
#include <vector>
#include <memory>
#include <string>

#include "dynolearn/numerics.hpp"

namespace dynolearn {

// Sliding window of the most recent observations, newest first.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t capacity) : slots_(capacity) {}

  void push(const Vector& y) {
    if (slots_.empty()) return;
    head_ = (head_ + 1) % slots_.size();
    slots_[head_] = y;
    if (size_ < slots_.size()) ++size_;
  }
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return slots_.size(); }
  bool empty() const { return size_ == 0; }
  // k = 0 is the newest observation; requires k < size().
  const Vector& newest(std::size_t k) const { return slots_[(head_ + slots_.size() - k) % slots_.size()]; }

 private:
  std::vector<Vector> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// A sequential one-step predictor. The protocol at every step is
// predict() for y_t, then observe(y_t).
class OnlinePredictor {
 public:
  virtual ~OnlinePredictor() = default;

  virtual Vector predict() const = 0;
  virtual void observe(const Vector& y) = 0;
  // Feed an observation without learning from it. Used for iterated
  // multi-step rollouts on a clone.
  virtual void advance(const Vector& y) { observe(y); }
  virtual std::unique_ptr<OnlinePredictor> clone() const = 0;
  virtual std::string name() const = 0;
};

// Prediction `steps` ahead obtained by feeding the predictor its own
// outputs. steps = 1 is predict().
Vector predict_ahead(const OnlinePredictor& predictor, std::size_t steps);

}  // namespace dynolearn
