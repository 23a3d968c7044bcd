#include <doctest.h>

#include <cmath>
#include <memory>

#include "dynolearn/errors.hpp"
#include "dynolearn/oracles.hpp"

using namespace dynolearn;

namespace {

LdsSpec scalar(double a, double q, double r) {
  LdsSpec s;
  s.A = Matrix{{a}};
  s.C = Matrix{{1.0}};
  s.noise.kind = NoiseKind::gaussian;
  s.noise.stdev_process = {q};
  s.noise.stdev_obs = {r};
  s.init.kind = InitPolicy::Kind::ball_grid;
  s.symmetric = true;
  return s;
}

LdsSpec three_state() {
  LdsSpec s;
  s.A = Matrix{{0.6, 0.2, 0.0}, {0.2, 0.5, 0.1}, {0.0, 0.1, -0.4}};
  s.C = Matrix{{1.0, 0.5, -0.3}, {0.0, 1.0, 1.0}};
  s.noise.kind = NoiseKind::gaussian;
  s.noise.stdev_process = {0.2, 0.1, 0.3};
  s.noise.stdev_obs = {0.1, 0.2};
  s.init.kind = InitPolicy::Kind::ball_grid;
  s.symmetric = true;
  return s;
}

}  // namespace

TEST_CASE("scalar steady state matches the Riccati root") {
  for (auto [a, q, r] : {std::tuple{0.9, 0.1, 0.1}, std::tuple{0.5, 0.3, 0.05}, std::tuple{-0.99, 0.01, 1.0}}) {
    const double qq = q * q, rr = r * r;
    const double b = rr - a * a * rr - qq;
    const double p = (-b + std::sqrt(b * b + 4.0 * qq * rr)) / 2.0;
    const KalmanGainSchedule sched(scalar(a, q, r));
    CHECK(std::abs(sched.steady_covariance()(0, 0) - p) <= 1e-10);
  }
}

TEST_CASE("kalman prior follows the init policy") {
  LdsSpec s = scalar(0.9, 0.1, 0.1);
  s.init.radius = 3.0;
  CHECK(kalman_prior(s).P(0, 0) == 9.0);
  s.init = InitPolicy::stationary();
  CHECK(kalman_prior(s).P(0, 0) == doctest::Approx(0.01 / (1.0 - 0.81)));
  CHECK(kalman_prior(s).xhat == Vector{0.0});
}

TEST_CASE("memoryless system predicts zero") {
  LdsSpec s = scalar(0.0, 0.5, 0.5);
  KalmanState st = kalman_prior(s);
  for (double y : {3.0, -1.0, 10.0}) {
    const KalmanStepResult r = kalman_step(s, st, Vector{y});
    CHECK(r.yhat_next[0] == 0.0);
    st = r.state;
  }
}

TEST_CASE("gain schedule predictor matches the full recursion") {
  const LdsSpec s = three_state();
  const Trajectory traj = simulate_lds(s, 300, Vector{0.5, -0.5, 0.2}, 8);
  auto sched = std::make_shared<const KalmanGainSchedule>(s);
  KalmanPredictor pred(sched);
  KalmanState st = kalman_prior(s);
  double worst = 0;
  for (const auto& y : traj.ys) {
    const Vector fast = pred.predict();
    const Vector slow = s.C * st.xhat;
    for (std::size_t i = 0; i < fast.size(); ++i) worst = std::max(worst, std::abs(fast[i] - slow[i]));
    pred.observe(y);
    st = kalman_step(s, st, y).state;
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("kernel betas equal C A^(k-1) C^T") {
  const LdsSpec s = three_state();
  const KernelOracle k = make_kernel_oracle(s, 12);
  REQUIRE(k.truncation() == 12);
  Matrix power = Matrix::identity(3);
  for (std::size_t i = 0; i < 12; ++i) {
    Matrix beta(2, 2);
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b) beta(r, c) += s.C(r, a) * power(a, b) * s.C(c, b);
    CHECK((beta - k.betas[i]).max_abs() < 1e-14);
    power = power * s.A;
  }
}

TEST_CASE("kernel truncation rule") {
  const std::size_t k = default_kernel_truncation(Matrix{{0.5}});
  CHECK(std::pow(0.5, static_cast<double>(k)) <= 1e-8);
  CHECK(std::pow(0.5, static_cast<double>(k - 1)) > 1e-8);
  CHECK(default_kernel_truncation(Matrix{{1.0}}) == 10000);
}

TEST_CASE("kernel prediction is the unrolled convolution") {
  const LdsSpec s = scalar(0.5, 0.1, 0.1);
  const KernelOracle k = make_kernel_oracle(s, 4);
  const std::vector<Vector> newest_first{{1.0}, {2.0}, {-4.0}};
  const Vector p = kernel_predict(k, newest_first);
  CHECK(p[0] == doctest::Approx(1.0 * 1.0 + 0.5 * 2.0 + 0.25 * -4.0));
}

TEST_CASE("deterministic truth oracle") {
  LdsSpec s = scalar(0.7, 0.0, 0.0);
  s.noise = NoiseSpec::none();
  const Trajectory traj = simulate_lds(s, 50, Vector{1.0}, 0);
  const auto truth = deterministic_truth(traj, s);
  for (std::size_t t = 0; t < traj.horizon(); ++t) CHECK(truth[t][0] == doctest::Approx(traj.ys[t][0]).epsilon(1e-15));

  TruthPredictor pred(traj, s);
  pred.observe(traj.ys[0]);
  CHECK(pred.predict()[0] == doctest::Approx(traj.ys[1][0]).epsilon(1e-15));

  const LdsSpec noisy = scalar(0.7, 0.1, 0.1);
  const Trajectory t2 = simulate_lds(noisy, 10, Vector{1.0}, 0);
  CHECK_THROWS_AS(deterministic_truth(t2, noisy), ContractViolation);
  const Trajectory no_states = simulate_lds(s, 10, Vector{1.0}, 0, false);
  CHECK_THROWS_AS(deterministic_truth(no_states, s), ContractViolation);
}

TEST_CASE("truth on noiseless lorenz") {
  LorenzSpec lz;
  const Trajectory traj = simulate_lorenz(lz, 200, Vector{1, 1, 1}, 0);
  const auto truth = deterministic_truth(traj, lz);
  for (std::size_t t = 0; t < traj.horizon(); ++t) CHECK(truth[t][0] == traj.ys[t][0]);
}
