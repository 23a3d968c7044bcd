#include "dynolearn/systems.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

#include "dynolearn/errors.hpp"
#include "dynolearn/rng.hpp"

namespace dynolearn {

namespace {

constexpr std::uint64_t kGridSeed = 0x5EEDB0A11C0FFEEULL;

double broadcast(const Vector& v, std::size_t i) {
  if (v.empty()) return 0.0;
  if (v.size() == 1) return v[0];
  return v[i];
}

void check_noise_vector(const Vector& v, std::size_t dim, const char* name) {
  if (!v.empty() && v.size() != 1 && v.size() != dim) {
    std::ostringstream msg;
    msg << name << ": expected 1 or " << dim << " entries, got " << v.size();
    throw ContractViolation(msg.str());
  }
  for (double s : v)
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvariantViolation(std::string(name) + ": stdev must be finite and >= 0");
}

void check_init(const InitPolicy& init, std::size_t dim) {
  if (init.kind == InitPolicy::Kind::fixed && init.x0.size() != dim)
    throw ContractViolation("init: fixed x0 has wrong dimension");
  if (init.kind == InitPolicy::Kind::ball_grid && (!(init.radius > 0.0) || init.points == 0))
    throw InvariantViolation("init: ball_grid needs radius > 0 and at least one point");
}

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 0x100000001b3ULL;
    }
  }
  void num(double x) { bytes(&x, sizeof x); }
  void num(std::uint64_t x) { bytes(&x, sizeof x); }
  void vec(const Vector& v) {
    num(static_cast<std::uint64_t>(v.size()));
    for (double x : v) num(x);
  }
  void mat(const Matrix& m) {
    num(static_cast<std::uint64_t>(m.rows()));
    num(static_cast<std::uint64_t>(m.cols()));
    for (double x : m.data()) num(x);
  }
  void init(const InitPolicy& p) {
    num(static_cast<std::uint64_t>(p.kind));
    vec(p.x0);
    num(p.radius);
    num(static_cast<std::uint64_t>(p.points));
  }
};

void check_x0(std::span<const double> x0, std::size_t dim) {
  if (x0.size() != dim) throw ContractViolation("simulate: x0 has wrong dimension");
  if (!all_finite(x0)) throw ContractViolation("simulate: x0 is not finite");
}

Trajectory simulate_linear(const LdsSpec& spec, const Matrix& transition, std::size_t horizon,
                           std::span<const double> x0, std::uint64_t seed, bool record_latent,
                           bool record_control) {
  if (horizon == 0) throw ContractViolation("simulate: horizon must be >= 1");
  const std::size_t d = spec.state_dim();
  const std::size_t p = spec.obs_dim();
  check_x0(x0, d);

  SeededRng root(seed);
  GaussianStream process(root.split(0));
  GaussianStream obs(root.split(1));
  const bool noisy = spec.noise.kind == NoiseKind::gaussian;

  Trajectory traj;
  traj.seed = seed;
  traj.spec_digest = spec_digest(SystemSpec{spec});
  traj.ys.reserve(horizon);
  if (record_latent) {
    traj.xs.emplace();
    traj.xs->reserve(horizon);
    if (record_control) traj.us.emplace();
  }

  Vector x(x0.begin(), x0.end());
  for (std::size_t t = 0; t < horizon; ++t) {
    Vector y = spec.C * x;
    if (noisy)
      for (std::size_t i = 0; i < p; ++i) y[i] += spec.noise.obs(i) * obs.standard();
    traj.ys.push_back(std::move(y));
    if (record_latent) {
      traj.xs->push_back(x);
      if (record_control) traj.us->push_back(*spec.K * x);
    }
    Vector next = transition * x;
    if (noisy)
      for (std::size_t i = 0; i < d; ++i) next[i] += spec.noise.process(i) * process.standard();
    x = std::move(next);
  }
  return traj;
}

Matrix symmetric_sqrt_psd(const Matrix& s) {
  SymEig eig = sym_eig(s);
  const std::size_t n = s.rows();
  Matrix root(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double scale = std::sqrt(std::max(eig.values[k], 0.0));
    for (std::size_t r = 0; r < n; ++r) root(r, k) = eig.vectors(r, k) * scale;
  }
  return root;
}

}  // namespace

double NoiseSpec::process(std::size_t i) const { return kind == NoiseKind::none ? 0.0 : broadcast(stdev_process, i); }

double NoiseSpec::obs(std::size_t i) const { return kind == NoiseKind::none ? 0.0 : broadcast(stdev_obs, i); }

bool NoiseSpec::noiseless() const {
  if (kind == NoiseKind::none) return true;
  auto zero = [](const Vector& v) { return std::all_of(v.begin(), v.end(), [](double s) { return s == 0.0; }); };
  return zero(stdev_process) && zero(stdev_obs);
}

std::vector<InitialCondition> initial_conditions(const InitPolicy& policy, std::size_t dim) {
  switch (policy.kind) {
    case InitPolicy::Kind::fixed:
      return {InitialCondition{false, policy.x0}};
    case InitPolicy::Kind::stationary:
      return {InitialCondition{true, {}}};
    case InitPolicy::Kind::ball_grid:
      break;
  }
  std::vector<InitialCondition> out;
  out.reserve(policy.points);
  GaussianStream dirs{SeededRng(kGridSeed)};
  for (std::size_t k = 0; k < policy.points; ++k) {
    Vector x(dim);
    if (dim == 1) {
      x[0] = (k % 2 == 0) ? policy.radius : -policy.radius;
    } else {
      double n = 0.0;
      while (n < 1e-8) {
        for (double& v : x) v = dirs.standard();
        n = norm2(x);
      }
      for (double& v : x) v *= policy.radius / n;
    }
    out.push_back({false, std::move(x)});
  }
  return out;
}

Matrix LdsSpec::transition() const {
  if (!has_feedback()) return A;
  return A + (*B) * (*K);
}

Matrix LdsSpec::process_covariance() const {
  Matrix q(state_dim(), state_dim());
  for (std::size_t i = 0; i < state_dim(); ++i) q(i, i) = noise.process(i) * noise.process(i);
  return q;
}

Matrix LdsSpec::obs_covariance() const {
  Matrix r(obs_dim(), obs_dim());
  for (std::size_t i = 0; i < obs_dim(); ++i) r(i, i) = noise.obs(i) * noise.obs(i);
  return r;
}

void LdsSpec::validate() const {
  if (A.empty() || !A.square()) throw ContractViolation("lds: A must be square and non-empty");
  if (C.empty() || C.cols() != A.rows()) throw ContractViolation("lds: C must have as many columns as A");
  if (!A.all_finite() || !C.all_finite()) throw InvariantViolation("lds: A and C must be finite");
  check_noise_vector(noise.stdev_process, state_dim(), "noise.process");
  check_noise_vector(noise.stdev_obs, obs_dim(), "noise.obs");
  check_init(init, state_dim());
  if (symmetric) {
    if (!is_symmetric(A, 1e-12)) throw InvariantViolation("lds: symmetric flag set but A is not symmetric");
    const double norm = spectral_radius_symmetric(A);
    if (norm > 1.0 + 1e-12) {
      std::ostringstream msg;
      msg << "lds: symmetric A must satisfy |A|_2 <= 1, got " << norm;
      throw InvariantViolation(msg.str());
    }
  }
  if (B.has_value() != K.has_value()) throw ContractViolation("lds: B and K must be given together");
  if (has_feedback()) {
    if (B->rows() != state_dim() || K->cols() != state_dim() || B->cols() != K->rows())
      throw ContractViolation("lds: B must be d×k and K k×d");
    if (!B->all_finite() || !K->all_finite()) throw InvariantViolation("lds: B and K must be finite");
    if (!is_schur_stable(transition()))
      throw InvariantViolation("lds: closed loop A+BK is not stable (spectral radius >= 1)");
  }
}

void LorenzSpec::validate() const {
  if (!(sigma > 0.0) || !(rho > 0.0) || !(beta > 0.0)) throw InvariantViolation("lorenz: sigma, rho, beta must be > 0");
  if (!(dt > 0.0) || dt > 0.05) throw InvariantViolation("lorenz: dt must lie in (0, 0.05]");
  if (obs_coords.empty()) throw InvariantViolation("lorenz: obs_coords must be non-empty");
  for (std::size_t c : obs_coords)
    if (c > 2) throw InvariantViolation("lorenz: obs_coords must be a subset of {x, y, z}");
  if (!(obs_noise >= 0.0) || !std::isfinite(obs_noise)) throw InvariantViolation("lorenz: obs_noise must be >= 0");
  check_init(init, 3);
}

std::size_t state_dim(const SystemSpec& system) {
  return std::visit([](const auto& s) -> std::size_t {
    if constexpr (std::is_same_v<std::decay_t<decltype(s)>, LdsSpec>) return s.state_dim();
    else return 3;
  }, system);
}

std::size_t obs_dim(const SystemSpec& system) {
  return std::visit([](const auto& s) { return s.obs_dim(); }, system);
}

bool is_noiseless(const SystemSpec& system) {
  return std::visit([](const auto& s) -> bool {
    if constexpr (std::is_same_v<std::decay_t<decltype(s)>, LdsSpec>) return s.noise.noiseless();
    else return s.obs_noise == 0.0;
  }, system);
}

const InitPolicy& init_policy(const SystemSpec& system) {
  return std::visit([](const auto& s) -> const InitPolicy& { return s.init; }, system);
}

void validate(const SystemSpec& system) {
  std::visit([](const auto& s) { s.validate(); }, system);
}

std::uint64_t spec_digest(const SystemSpec& system) {
  Fnv f;
  if (const auto* lds = std::get_if<LdsSpec>(&system)) {
    f.num(std::uint64_t{1});
    f.mat(lds->A);
    f.mat(lds->C);
    f.num(static_cast<std::uint64_t>(lds->has_feedback()));
    if (lds->has_feedback()) {
      f.mat(*lds->B);
      f.mat(*lds->K);
    }
    f.num(static_cast<std::uint64_t>(lds->noise.kind));
    f.vec(lds->noise.stdev_process);
    f.vec(lds->noise.stdev_obs);
    f.init(lds->init);
    f.num(static_cast<std::uint64_t>(lds->symmetric));
  } else {
    const auto& lz = std::get<LorenzSpec>(system);
    f.num(std::uint64_t{2});
    f.num(lz.sigma);
    f.num(lz.rho);
    f.num(lz.beta);
    f.num(lz.dt);
    f.num(static_cast<std::uint64_t>(lz.obs_coords.size()));
    for (auto c : lz.obs_coords) f.num(static_cast<std::uint64_t>(c));
    f.num(lz.obs_noise);
    f.init(lz.init);
  }
  return f.h;
}

Trajectory simulate_lds(const LdsSpec& spec, std::size_t horizon, std::span<const double> x0,
                        std::uint64_t seed, bool record_latent) {
  spec.validate();
  return simulate_linear(spec, spec.A, horizon, x0, seed, record_latent, false);
}

Trajectory simulate_closed_loop(const LdsSpec& spec, std::size_t horizon, std::span<const double> x0,
                                std::uint64_t seed, bool record_latent) {
  if (!spec.has_feedback()) throw ContractViolation("simulate_closed_loop: spec has no feedback (B, K)");
  spec.validate();
  return simulate_linear(spec, spec.transition(), horizon, x0, seed, record_latent, true);
}

Vector lorenz_derivative(const LorenzSpec& spec, std::span<const double> s) {
  return {spec.sigma * (s[1] - s[0]), s[0] * (spec.rho - s[2]) - s[1], s[0] * s[1] - spec.beta * s[2]};
}

Vector lorenz_rk4_step(const LorenzSpec& spec, std::span<const double> s) {
  const double h = spec.dt;
  Vector k1 = lorenz_derivative(spec, s);
  Vector tmp(3);
  for (int i = 0; i < 3; ++i) tmp[i] = s[i] + 0.5 * h * k1[i];
  Vector k2 = lorenz_derivative(spec, tmp);
  for (int i = 0; i < 3; ++i) tmp[i] = s[i] + 0.5 * h * k2[i];
  Vector k3 = lorenz_derivative(spec, tmp);
  for (int i = 0; i < 3; ++i) tmp[i] = s[i] + h * k3[i];
  Vector k4 = lorenz_derivative(spec, tmp);
  Vector out(3);
  for (int i = 0; i < 3; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

Vector lorenz_observe(const LorenzSpec& spec, std::span<const double> s) {
  Vector y(spec.obs_coords.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s[spec.obs_coords[i]];
  return y;
}

Trajectory simulate_lorenz(const LorenzSpec& spec, std::size_t horizon, std::span<const double> x0,
                           std::uint64_t seed, bool record_latent) {
  spec.validate();
  if (horizon == 0) throw ContractViolation("simulate: horizon must be >= 1");
  check_x0(x0, 3);
  GaussianStream obs(SeededRng(seed).split(1));

  Trajectory traj;
  traj.seed = seed;
  traj.spec_digest = spec_digest(SystemSpec{spec});
  traj.ys.reserve(horizon);
  if (record_latent) {
    traj.xs.emplace();
    traj.xs->reserve(horizon);
  }
  Vector s(x0.begin(), x0.end());
  for (std::size_t t = 0; t < horizon; ++t) {
    if (!all_finite(s)) {
      std::ostringstream msg;
      msg << "simulate_lorenz: integration blew up at step " << t;
      throw NumericalFailure(msg.str());
    }
    Vector y = lorenz_observe(spec, s);
    if (spec.obs_noise > 0.0)
      for (double& v : y) v += spec.obs_noise * obs.standard();
    traj.ys.push_back(std::move(y));
    if (record_latent) traj.xs->push_back(s);
    s = lorenz_rk4_step(spec, s);
  }
  return traj;
}

Trajectory simulate(const SystemSpec& system, std::size_t horizon, std::span<const double> x0,
                    std::uint64_t seed, bool record_latent) {
  if (const auto* lds = std::get_if<LdsSpec>(&system)) {
    if (lds->has_feedback()) return simulate_closed_loop(*lds, horizon, x0, seed, record_latent);
    return simulate_lds(*lds, horizon, x0, seed, record_latent);
  }
  return simulate_lorenz(std::get<LorenzSpec>(system), horizon, x0, seed, record_latent);
}

Vector resolve_initial_state(const SystemSpec& system, const InitialCondition& init, std::uint64_t seed) {
  if (!init.stationary) return init.x0;
  const auto* lds = std::get_if<LdsSpec>(&system);
  if (lds == nullptr) throw ContractViolation("stationary initial state is only defined for linear systems");
  const Matrix sigma = stationary_covariance(lds->transition(), lds->process_covariance());
  const Matrix root = symmetric_sqrt_psd(sigma);
  GaussianStream g(SeededRng(seed).split(2));
  Vector z(lds->state_dim());
  for (double& v : z) v = g.standard();
  return root * z;
}

double spectral_norm(const Matrix& m) {
  if (!m.square()) throw ContractViolation("spectral_norm: matrix is not square");
  const SymEig eig = sym_eig(transpose_times(m, m));
  return std::sqrt(std::max(eig.values.front(), 0.0));
}

double spectral_radius_symmetric(const Matrix& m) {
  const SymEig eig = sym_eig(m);
  return std::max(std::abs(eig.values.front()), std::abs(eig.values.back()));
}

bool is_schur_stable(const Matrix& m) {
  if (!m.square()) throw ContractViolation("is_schur_stable: matrix is not square");
  Matrix power = m;
  for (int k = 0; k < 40; ++k) {
    if (!power.all_finite()) return false;
    const double n = spectral_norm(power);
    if (n < 1.0) return true;
    if (n > 1e150) return false;
    power = power * power;
  }
  return false;
}

Matrix stationary_covariance(const Matrix& m, const Matrix& q) {
  if (!is_schur_stable(m)) throw InvariantViolation("stationary_covariance: transition is not stable");
  // Doubling: Σ_{k+1} = Σ_k + M_k Σ_k M_kᵀ with M_{k+1} = M_k².
  Matrix sigma = q;
  Matrix power = m;
  for (int k = 0; k < 64 && power.max_abs() > 1e-300; ++k) {
    sigma += power * sigma * power.transpose();
    power = power * power;
    if (power.max_abs() < 1e-18) break;
  }
  symmetrize(sigma);
  return sigma;
}

}  // namespace dynolearn
