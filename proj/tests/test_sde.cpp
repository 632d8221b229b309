#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "ctlqr/matrix_ops.hpp"
#include "ctlqr/rng.hpp"
#include "ctlqr/sde.hpp"

using namespace ctlqr;

namespace {

Matrix random_matrix(CounterRng& rng, Eigen::Index r, Eigen::Index c) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 2.0 * rng.next_double() - 1.0;
  }
  return m;
}

Matrix random_stable(CounterRng& rng, Eigen::Index d, double margin) {
  Matrix a = random_matrix(rng, d, d);
  a -= (stability_margin(a) + margin) * Matrix::Identity(d, d);
  return a;
}

/// Stationary covariance of x+ = F x + G u + w, u ~ N(0, I), w ~ N(0, S):
/// solves X = F X F' + G G' + S by vectorization (test-local oracle).
Matrix discrete_stationary_cov(const Matrix& f, const Matrix& g, const Matrix& s) {
  const Eigen::Index d = f.rows();
  // vec(F X F') = kron(F, F) vec(X) in column-major order.
  Matrix sys = Matrix::Identity(d * d, d * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      sys.block(i * d, j * d, d, d) -= f(i, j) * f;
    }
  }
  const Matrix q = g * g.transpose() + s;
  const Eigen::Map<const Vector> vec_q(q.data(), d * d);
  const Vector vec_x = sys.partialPivLu().solve(vec_q);
  return Eigen::Map<const Matrix>(vec_x.data(), d, d);
}

}  // namespace

TEST_CASE("discretize closed forms") {
  const double h = 1.0 / 30.0;
  ContinuousSystem sys{Matrix::Zero(3, 3), Matrix::Identity(3, 3)};
  DiscretizedSystem disc = discretize(sys, h);
  CHECK((disc.Aprime - Matrix::Identity(3, 3)).norm() <= 1e-14);
  CHECK((disc.Bprime - h * Matrix::Identity(3, 3)).norm() <= 1e-14);
  CHECK((disc.Sigma - h * Matrix::Identity(3, 3)).norm() <= 1e-14);

  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 1.0;
  DiscretizedSystem scalar = discretize({a, b}, 1.0);
  CHECK(scalar.Aprime(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));
  CHECK(scalar.Bprime(0, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(scalar.Sigma(0, 0) == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-12));
}

TEST_CASE("discretize second-order Taylor remainder at h = 1/30") {
  CounterRng rng(201);
  const double h = 1.0 / 30.0;
  for (int trial = 0; trial < 10; ++trial) {
    Matrix a = random_matrix(rng, 3, 3);
    DiscretizedSystem disc = discretize({a, Matrix::Identity(3, 3)}, h);
    const double nah = spectral_norm(a * h);
    const double remainder = spectral_norm(disc.Aprime - Matrix::Identity(3, 3) - a * h);
    CHECK(remainder <= 0.5 * nah * nah * std::exp(nah) + 1e-15);
  }
}

TEST_CASE("discretize factor reproduces Sigma") {
  CounterRng rng(202);
  Matrix a = random_stable(rng, 4, 0.3);
  DiscretizedSystem disc = discretize({a, Matrix::Identity(4, 4)}, 0.2);
  CHECK((disc.sigma_chol * disc.sigma_chol.transpose() - disc.Sigma).norm() <= 1e-10);
}

TEST_CASE("step is the exact flow when noise is off") {
  CounterRng rng(203);
  NoiseModel off{0.0, 0};

  Matrix a(1, 1), b(1, 1);
  a << -1.0;
  b << 0.0;
  DiscretizedSystem disc = discretize({a, b}, 1.0);
  Vector x(1), u(1);
  x << 1.0;
  u << 0.0;
  CHECK(step(disc, x, u, off, rng)(0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-13));

  DiscretizedSystem integrator = discretize({Matrix::Zero(3, 3), Matrix::Identity(3, 3)}, 1.0 / 30);
  Vector u3(3);
  u3 << 1, 2, 3;
  const Vector next = step(integrator, Vector::Zero(3), u3, off, rng);
  CHECK((next - u3 / 30.0).norm() <= 1e-14);
}

TEST_CASE("step rejects mismatched dimensions") {
  CounterRng rng(204);
  NoiseModel noise{1.0, 0};
  DiscretizedSystem disc = discretize({Matrix::Zero(2, 2), Matrix::Identity(2, 2)}, 0.1);
  CHECK_THROWS_AS(step(disc, Vector::Zero(3), Vector::Zero(2), noise, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(step(disc, Vector::Zero(2), Vector::Zero(1), noise, rng),
                  std::invalid_argument);
}

TEST_CASE("step noise matches N(0, Sigma) moments over 1e5 draws") {
  CounterRng rng(205);
  Matrix a = random_stable(rng, 3, 0.5);
  DiscretizedSystem disc = discretize({a, Matrix::Identity(3, 3)}, 1.0 / 30);
  NoiseModel noise{1.0, 0};
  const Vector x = Vector::Ones(3);
  const Vector u = Vector::Ones(3);
  const Vector mean_pred = disc.Aprime * x + disc.Bprime * u;

  const int n = 100000;
  Vector mean = Vector::Zero(3);
  Matrix second = Matrix::Zero(3, 3);
  for (int i = 0; i < n; ++i) {
    const Vector w = step(disc, x, u, noise, rng) - mean_pred;
    mean += w;
    second += w * w.transpose();
  }
  mean /= n;
  const Matrix cov = second / n - mean * mean.transpose();

  const double mean_tol = 4.0 * std::sqrt(spectral_norm(disc.Sigma) / n);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean(i)) <= mean_tol);
  CHECK((cov - disc.Sigma).norm() <= 0.02 * disc.Sigma.norm());
}

TEST_CASE("dithered feedback with K = 0 is the exact open-loop recursion") {
  CounterRng rng(206);
  Matrix a = random_matrix(rng, 3, 3);
  ContinuousSystem sys{a, random_matrix(rng, 3, 2)};
  DiscretizedSystem disc = discretize(sys, 0.05);
  NoiseModel off{0.0, 0};

  CounterRng sim_rng(42);
  const Matrix k0 = Matrix::Zero(2, 3);
  SampledTrajectory traj =
      simulate_dithered_feedback(sys, k0, Vector::Ones(3), 25, 0.05, off, sim_rng);
  REQUIRE(traj.states.size() == 26);
  REQUIRE(traj.actions.size() == 25);
  for (std::size_t k = 0; k < traj.transitions(); ++k) {
    const Vector pred = disc.Aprime * traj.states[k] + disc.Bprime * traj.actions[k];
    CHECK((traj.states[k + 1] - pred).norm() <= 1e-12 * std::max(1.0, pred.norm()));
  }
}

TEST_CASE("zero dither and zero noise follow the matrix-exponential flow") {
  CounterRng rng(207);
  Matrix a = random_matrix(rng, 3, 3);
  Matrix b = random_matrix(rng, 3, 3);
  Matrix k = random_matrix(rng, 3, 3);
  ContinuousSystem sys{a, b};
  NoiseModel off{0.0, 0};

  CounterRng sim_rng(43);
  const Vector x0 = Vector::Ones(3);
  const double h = 0.1;
  SampledTrajectory traj = simulate_dithered_feedback(sys, k, x0, 12, h, off, sim_rng, 0.0);
  for (std::size_t j = 0; j < traj.states.size(); ++j) {
    const Vector expect = expm(a + b * k, h * static_cast<double>(j)) * x0;
    CHECK((traj.states[j] - expect).norm() <= 1e-11 * std::max(1.0, expect.norm()));
  }
}

TEST_CASE("stationary covariance of stable dithered loop matches the Lyapunov oracle") {
  Matrix a(3, 3);
  a << -2.0, 0.4, 0.1, -0.3, -1.8, 0.2, 0.1, 0.2, -2.2;
  ContinuousSystem sys{a, Matrix::Identity(3, 3)};
  const double h = 0.5;  // fast mixing per step so 1e4 samples resolve 5%
  DiscretizedSystem disc = discretize(sys, h);
  const Matrix target = discrete_stationary_cov(disc.Aprime, disc.Bprime, disc.Sigma);

  NoiseModel noise{1.0, 0};
  CounterRng rng(212);
  const Matrix k0 = Matrix::Zero(3, 3);
  SampledTrajectory traj =
      simulate_dithered_feedback(sys, k0, Vector::Zero(3), 10000, h, noise, rng);
  double max_norm = 0.0;
  Matrix cov = Matrix::Zero(3, 3);
  const std::size_t burn = 500;
  for (std::size_t j = burn; j < traj.states.size(); ++j) {
    max_norm = std::max(max_norm, traj.states[j].norm());
    cov += traj.states[j] * traj.states[j].transpose();
  }
  cov /= static_cast<double>(traj.states.size() - burn);
  CHECK(std::isfinite(max_norm));
  CHECK((cov - target).norm() <= 0.05 * target.norm());
}

TEST_CASE("guard fires on an unstable loop and never on a huge threshold") {
  Matrix a(2, 2);
  a << 0.8, 0.0, 0.0, 0.5;  // unstable drift
  ContinuousSystem sys{a, Matrix::Identity(2, 2)};
  NoiseModel off{0.0, 0};
  CounterRng rng(209);

  const Matrix k_zero = Matrix::Zero(2, 2);
  const Matrix k_fb = -2.0 * Matrix::Identity(2, 2);  // A + B K_fb stable
  Vector x0(2);
  x0 << 1.0, 0.5;

  SampledTrajectory diverging =
      simulate_feedback_guarded(sys, k_zero, k_fb, x0, 200, 0.1, 5.0, off, rng);
  REQUIRE(diverging.event.has_value());
  const std::size_t idx = diverging.event->index;
  CHECK(diverging.states[idx].norm() >= 5.0);
  // after the switch the fallback loop decays
  CHECK(diverging.states.back().norm() < diverging.states[idx].norm());

  CounterRng rng2(209);
  SampledTrajectory guarded = simulate_feedback_guarded(
      sys, k_fb, k_zero, x0, 200, 0.1, std::numeric_limits<double>::infinity(), off, rng2);
  CHECK(!guarded.event.has_value());
}

TEST_CASE("guard rejects a non-positive threshold") {
  ContinuousSystem sys{-Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
  NoiseModel noise{1.0, 0};
  CounterRng rng(213);
  const Matrix k = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(
      simulate_feedback_guarded(sys, k, k, Vector::Zero(2), 5, 0.1, 0.0, noise, rng),
      std::invalid_argument);
}

TEST_CASE("binary grid refinement agrees in the deterministic case") {
  CounterRng rng(210);
  Matrix a = random_stable(rng, 3, 0.5);
  ContinuousSystem sys{a, Matrix::Identity(3, 3)};
  NoiseModel off{0.0, 0};
  const Matrix k = Matrix::Zero(3, 3);
  Vector x0(3);
  x0 << 1, -1, 2;

  CounterRng r1(5), r2(5);
  SampledTrajectory coarse = simulate_dithered_feedback(sys, k, x0, 10, 0.2, off, r1, 0.0);
  SampledTrajectory fine = simulate_dithered_feedback(sys, k, x0, 20, 0.1, off, r2, 0.0);
  for (std::size_t j = 0; j < coarse.states.size(); ++j) {
    CHECK((coarse.states[j] - fine.states[2 * j]).norm() <= 1e-11);
  }
}

TEST_CASE("identical seeds give bit-identical trajectories") {
  CounterRng rng(211);
  Matrix a = random_stable(rng, 3, 0.5);
  ContinuousSystem sys{a, Matrix::Identity(3, 3)};
  NoiseModel noise{1.0, 0};
  const Matrix k = Matrix::Zero(3, 3);

  CounterRng r1(77), r2(77);
  SampledTrajectory t1 = simulate_dithered_feedback(sys, k, Vector::Zero(3), 50, 0.05, noise, r1);
  SampledTrajectory t2 = simulate_dithered_feedback(sys, k, Vector::Zero(3), 50, 0.05, noise, r2);
  for (std::size_t j = 0; j < t1.states.size(); ++j) {
    CHECK(t1.states[j] == t2.states[j]);
  }
}

TEST_CASE("trajectory CSV layout") {
  SampledTrajectory traj;
  traj.h = 0.5;
  traj.states = {Vector::Zero(2), Vector::Ones(2)};
  Vector u(1);
  u << 3.25;
  traj.actions = {u};
  const std::string text = trajectory_to_csv(traj);
  CHECK(text.find("k,t,x_0,x_1,u_0\n") == 0);
  CHECK(text.find("0,0,0,0,3.25\n") != std::string::npos);
  CHECK(text.find("1,0.5,1,1,\n") != std::string::npos);  // blank action on the final row
}
