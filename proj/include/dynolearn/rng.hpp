#pragma once

#include <cstdint>
#include <optional>

namespace dynolearn {

// Counter-based generator: the n-th output is splitmix64(seed + n·γ), so a
// stream is fully described by (seed, counter) and child streams can be
// derived without touching the parent.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();

  // Seed of the index-th child stream. Pure function of (seed, index).
  std::uint64_t child_seed(std::uint64_t index) const;
  SeededRng split(std::uint64_t index) const { return SeededRng(child_seed(index)); }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

std::uint64_t mix64(std::uint64_t z);

// Box–Muller normal draws on top of a SeededRng. stdev = 0 yields the mean.
class GaussianStream {
 public:
  GaussianStream(SeededRng rng, double mean = 0.0, double stdev = 1.0);

  double next();
  double standard();

 private:
  SeededRng rng_;
  double mean_;
  double stdev_;
  std::optional<double> spare_;
};

}  // namespace dynolearn
