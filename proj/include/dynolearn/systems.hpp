#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "dynolearn/numerics.hpp"

namespace dynolearn {

enum class NoiseKind { gaussian, none };

// Per-coordinate noise scales. A single entry broadcasts to every coordinate;
// an empty vector means zero.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::none;
  Vector stdev_process;
  Vector stdev_obs;

  double process(std::size_t i) const;
  double obs(std::size_t i) const;
  bool noiseless() const;

  static NoiseSpec none() { return {}; }
  static NoiseSpec gaussian(Vector process, Vector obs) {
    return {NoiseKind::gaussian, std::move(process), std::move(obs)};
  }
};

struct InitPolicy {
  enum class Kind { fixed, ball_grid, stationary };
  Kind kind = Kind::ball_grid;
  Vector x0;             // fixed
  double radius = 1.0;   // ball_grid
  std::size_t points = 8;

  static InitPolicy fixed(Vector x0) { return {Kind::fixed, std::move(x0), 1.0, 1}; }
  static InitPolicy ball_grid(double radius = 1.0, std::size_t points = 8) {
    return {Kind::ball_grid, {}, radius, points};
  }
  static InitPolicy stationary() { return {Kind::stationary, {}, 1.0, 1}; }
};

// One admissible starting point. `stationary` means x0 is drawn per
// trajectory from the stationary law instead of being fixed.
struct InitialCondition {
  bool stationary = false;
  Vector x0;
};

// Deterministic list of admissible initial conditions for a state dimension.
// ball_grid places `points` fixed pseudo-random directions on the sphere of
// the given radius (for dim 1 the directions alternate ±1).
std::vector<InitialCondition> initial_conditions(const InitPolicy& policy, std::size_t dim);

struct LdsSpec {
  Matrix A;
  Matrix C;
  std::optional<Matrix> B;
  std::optional<Matrix> K;
  NoiseSpec noise;
  InitPolicy init;
  bool symmetric = false;

  std::size_t state_dim() const { return A.rows(); }
  std::size_t obs_dim() const { return C.rows(); }
  bool has_feedback() const { return B.has_value() && K.has_value(); }
  // A + BK when feedback is present, A otherwise.
  Matrix transition() const;
  Matrix process_covariance() const;
  Matrix obs_covariance() const;

  // Throws InvariantViolation (or ContractViolation on shape errors).
  void validate() const;
};

struct LorenzSpec {
  double sigma = 10.0;
  double rho = 28.0;
  double beta = 8.0 / 3.0;
  double dt = 0.01;
  std::vector<std::size_t> obs_coords{0};
  double obs_noise = 0.0;
  InitPolicy init = InitPolicy::fixed({1.0, 1.0, 1.0});

  std::size_t obs_dim() const { return obs_coords.size(); }
  void validate() const;
};

using SystemSpec = std::variant<LdsSpec, LorenzSpec>;

std::size_t state_dim(const SystemSpec& system);
std::size_t obs_dim(const SystemSpec& system);
bool is_noiseless(const SystemSpec& system);
const InitPolicy& init_policy(const SystemSpec& system);
void validate(const SystemSpec& system);

struct Trajectory {
  std::vector<Vector> ys;
  std::optional<std::vector<Vector>> xs;
  std::optional<std::vector<Vector>> us;  // closed loop only
  std::uint64_t seed = 0;
  std::uint64_t spec_digest = 0;

  std::size_t horizon() const { return ys.size(); }
};

// Content hash (FNV-1a over the numeric fields) of a system spec.
std::uint64_t spec_digest(const SystemSpec& system);

// y_t = C x_t + v_t, x_{t+1} = A x_t + w_t for t = 0..horizon-1, x_0 = x0.
Trajectory simulate_lds(const LdsSpec& spec, std::size_t horizon, std::span<const double> x0,
                        std::uint64_t seed, bool record_latent = true);
// Same recursion with transition A+BK; records u_t = K x_t alongside xs.
Trajectory simulate_closed_loop(const LdsSpec& spec, std::size_t horizon, std::span<const double> x0,
                                std::uint64_t seed, bool record_latent = true);
// RK4 at step dt, one observation per step. Throws NumericalFailure naming
// the step when the state stops being finite.
Trajectory simulate_lorenz(const LorenzSpec& spec, std::size_t horizon, std::span<const double> x0,
                           std::uint64_t seed, bool record_latent = true);

// Dispatches on the system kind; closed-loop LDS goes through simulate_closed_loop.
Trajectory simulate(const SystemSpec& system, std::size_t horizon, std::span<const double> x0,
                    std::uint64_t seed, bool record_latent = true);

// Resolves an initial condition to a concrete x0. Stationary conditions draw
// from N(0, Σ∞) using a stream derived from `seed`.
Vector resolve_initial_state(const SystemSpec& system, const InitialCondition& init, std::uint64_t seed);

// Noiseless one-step propagation of the latent state and the noiseless
// observation map, shared by the simulators and the deterministic oracle.
Vector lorenz_derivative(const LorenzSpec& spec, std::span<const double> s);
Vector lorenz_rk4_step(const LorenzSpec& spec, std::span<const double> s);
Vector lorenz_observe(const LorenzSpec& spec, std::span<const double> s);

double spectral_norm(const Matrix& m);
double spectral_radius_symmetric(const Matrix& m);
// ρ(M) < 1, decided by repeated squaring: some |M^(2^k)|₂ < 1 proves it.
bool is_schur_stable(const Matrix& m);
// Fixed point of Σ = M Σ Mᵀ + Q for Schur-stable M.
Matrix stationary_covariance(const Matrix& m, const Matrix& q);

}  // namespace dynolearn
