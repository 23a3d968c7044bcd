#include "dynolearn/rng.hpp"

#include <cmath>
#include <numbers>

#include "dynolearn/errors.hpp"

namespace dynolearn {

namespace {
constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return mix64(seed_ + counter_ * kGamma);
}

double SeededRng::uniform() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

std::uint64_t SeededRng::child_seed(std::uint64_t index) const {
  return mix64(seed_ ^ mix64(index * kSplitSalt + kGamma));
}

GaussianStream::GaussianStream(SeededRng rng, double mean, double stdev)
    : rng_(rng), mean_(mean), stdev_(stdev) {
  if (!(stdev >= 0.0) || !std::isfinite(stdev)) throw ContractViolation("GaussianStream: stdev must be finite and >= 0");
}

double GaussianStream::standard() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = rng_.uniform();
  const double u2 = rng_.uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  return r * std::cos(angle);
}

double GaussianStream::next() {
  if (stdev_ == 0.0) return mean_;
  return mean_ + stdev_ * standard();
}

}  // namespace dynolearn
