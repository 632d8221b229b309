#include "ctlqr/sde.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cstdio>
#include <stdexcept>
#include <string>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

/// Cholesky of a PSD matrix; falls back to an eigendecomposition factor with
/// negative eigenvalues clipped to zero when the LLT crosses zero numerically.
Matrix psd_factor(const Matrix& sigma) {
  Eigen::LLT<Matrix> llt(sigma);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sigma);
  if (es.info() != Eigen::Success) {
    throw NumericError("discretize: failed to factor noise covariance");
  }
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

Vector draw_noise(const DiscretizedSystem& disc, const NoiseModel& noise, CounterRng& rng) {
  if (noise.scale == 0.0) return Vector::Zero(disc.Aprime.rows());
  return noise.scale * (disc.sigma_chol * rng.gaussian_vector(disc.Aprime.rows()));
}

}  // namespace

DiscretizedSystem discretize(const ContinuousSystem& sys, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("discretize: h must be positive");
  if (sys.B.rows() != sys.A.rows()) {
    throw std::invalid_argument("discretize: A and B row counts differ");
  }
  DiscretizedSystem disc;
  disc.h = h;
  disc.Aprime = expm(sys.A, h);
  disc.Bprime = exp_integral(sys.A, h) * sys.B;
  disc.Sigma = noise_covariance(sys.A, h);
  disc.sigma_chol = psd_factor(disc.Sigma);
  return disc;
}

Vector step(const DiscretizedSystem& disc, const Vector& x, const Vector& u,
            const NoiseModel& noise, CounterRng& rng) {
  if (x.size() != disc.Aprime.cols() || u.size() != disc.Bprime.cols()) {
    throw std::invalid_argument("step: state or action dimension mismatch");
  }
  return disc.Aprime * x + disc.Bprime * u + draw_noise(disc, noise, rng);
}

SampledTrajectory simulate_dithered_feedback(const ContinuousSystem& sys, const Matrix& K,
                                             const Vector& x0, std::size_t n_steps, double h,
                                             const NoiseModel& noise, CounterRng& rng,
                                             double dither_scale) {
  if (n_steps < 1) throw std::invalid_argument("simulate_dithered_feedback: n_steps < 1");
  const ContinuousSystem closed{sys.A + sys.B * K, sys.B};
  const DiscretizedSystem disc = discretize(closed, h);
  const Eigen::Index p = sys.p();

  SampledTrajectory traj;
  traj.h = h;
  traj.states.reserve(n_steps + 1);
  traj.actions.reserve(n_steps);
  traj.states.push_back(x0);
  Vector x = x0;
  for (std::size_t k = 0; k < n_steps; ++k) {
    Vector u = dither_scale == 0.0 ? Vector::Zero(p).eval()
                                   : (dither_scale * rng.gaussian_vector(p)).eval();
    x = step(disc, x, u, noise, rng);
    traj.actions.push_back(std::move(u));
    traj.states.push_back(x);
  }
  return traj;
}

SampledTrajectory simulate_feedback_guarded(const ContinuousSystem& sys, const Matrix& K,
                                            const Matrix& K_fallback, const Vector& x_start,
                                            std::size_t n_steps, double h, double threshold,
                                            const NoiseModel& noise, CounterRng& rng) {
  if (!(threshold > 0.0)) throw std::invalid_argument("simulate_feedback_guarded: threshold <= 0");
  const DiscretizedSystem disc_main = discretize({sys.A + sys.B * K, sys.B}, h);
  const DiscretizedSystem disc_fb = discretize({sys.A + sys.B * K_fallback, sys.B}, h);

  SampledTrajectory traj;
  traj.h = h;
  traj.states.reserve(n_steps + 1);
  traj.actions.reserve(n_steps);
  traj.states.push_back(x_start);
  Vector x = x_start;
  bool switched = false;
  for (std::size_t k = 0; k < n_steps; ++k) {
    if (!switched && x.norm() >= threshold) {
      switched = true;
      traj.event = TrajectoryEvent{k, TrajectoryEvent::Kind::DivergenceThreshold};
    }
    const Matrix& gain = switched ? K_fallback : K;
    const DiscretizedSystem& disc = switched ? disc_fb : disc_main;
    traj.actions.push_back(gain * x);
    x = disc.Aprime * x + draw_noise(disc, noise, rng);
    traj.states.push_back(x);
  }
  if (!traj.event && x.norm() >= threshold) {
    traj.event = TrajectoryEvent{n_steps, TrajectoryEvent::Kind::DivergenceThreshold};
  }
  return traj;
}

std::string trajectory_to_csv(const SampledTrajectory& traj) {
  const Eigen::Index d = traj.states.empty() ? 0 : traj.states.front().size();
  const Eigen::Index p = traj.actions.empty() ? 0 : traj.actions.front().size();
  std::string out = "k,t";
  char buf[64];
  for (Eigen::Index i = 0; i < d; ++i) {
    std::snprintf(buf, sizeof(buf), ",x_%ld", static_cast<long>(i));
    out += buf;
  }
  for (Eigen::Index i = 0; i < p; ++i) {
    std::snprintf(buf, sizeof(buf), ",u_%ld", static_cast<long>(i));
    out += buf;
  }
  out += '\n';
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g", k, static_cast<double>(k) * traj.h);
    out += buf;
    for (Eigen::Index i = 0; i < d; ++i) {
      std::snprintf(buf, sizeof(buf), ",%.12g", traj.states[k](i));
      out += buf;
    }
    for (Eigen::Index i = 0; i < p; ++i) {
      if (k < traj.actions.size()) {
        std::snprintf(buf, sizeof(buf), ",%.12g", traj.actions[k](i));
        out += buf;
      } else {
        out += ',';
      }
    }
    out += '\n';
  }
  return out;
}

}  // namespace ctlqr
