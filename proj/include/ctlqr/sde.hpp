#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ctlqr/matrix_ops.hpp"
#include "ctlqr/rng.hpp"

namespace ctlqr {

/// Continuous-time linear dynamics dX = AX dt + BU dt + dW.
struct ContinuousSystem {
  Matrix A;  // d x d, units 1/time
  Matrix B;  // d x p

  Eigen::Index d() const { return A.rows(); }
  Eigen::Index p() const { return B.cols(); }
};

/// Exact interval-h transition triple of the linear SDE:
/// x+ = Aprime x + Bprime u + w with w ~ N(0, sigma^2 * Sigma).
struct DiscretizedSystem {
  double h = 0.0;
  Matrix Aprime;      // e^{Ah}
  Matrix Bprime;      // [integral of e^{As} ds] B
  Matrix Sigma;       // noise covariance over one interval
  Matrix sigma_chol;  // factor with sigma_chol * sigma_chol' = Sigma
};

struct TrajectoryEvent {
  enum class Kind { DivergenceThreshold };
  std::size_t index = 0;
  Kind kind = Kind::DivergenceThreshold;
};

/// States x_0..x_n and the piecewise-constant actions u_0..u_{n-1} on an
/// h-grid; states.size() == actions.size() + 1.
struct SampledTrajectory {
  double h = 0.0;
  std::vector<Vector> states;
  std::vector<Vector> actions;
  std::optional<TrajectoryEvent> event;

  std::size_t transitions() const { return actions.size(); }
};

/// scale 1 = standard Brownian motion, 0 = deterministic drift only.
struct NoiseModel {
  double scale = 1.0;
  std::uint64_t seed = 0;
};

/// Exact discretization at step h via the matrix-exponential transition law.
DiscretizedSystem discretize(const ContinuousSystem& sys, double h);

/// One exact transition step. Throws std::invalid_argument on dimension mismatch.
Vector step(const DiscretizedSystem& disc, const Vector& x, const Vector& u,
            const NoiseModel& noise, CounterRng& rng);

/// Closed-loop exploration: U_t = K X_t + u_k with dither u_k ~ N(0, dither_scale^2 I_p)
/// held over each interval. Simulated exactly as the closed loop (A + BK, B) driven by
/// the dither; the dither vectors are recorded as the trajectory actions.
SampledTrajectory simulate_dithered_feedback(const ContinuousSystem& sys, const Matrix& K,
                                             const Vector& x0, std::size_t n_steps, double h,
                                             const NoiseModel& noise, CounterRng& rng,
                                             double dither_scale = 1.0);

/// Pure state feedback U_t = K X_t with a divergence guard: at the first grid
/// point where ||x_k|| >= threshold the gain switches permanently to K_fallback
/// and the crossing index is recorded as the trajectory event. Recorded actions
/// are the applied feedback (active gain) * x_k.
SampledTrajectory simulate_feedback_guarded(const ContinuousSystem& sys, const Matrix& K,
                                            const Matrix& K_fallback, const Vector& x_start,
                                            std::size_t n_steps, double h, double threshold,
                                            const NoiseModel& noise, CounterRng& rng);

/// CSV rows `k,t,x_0..x_{d-1},u_0..u_{p-1}`, action fields blank on the final row.
std::string trajectory_to_csv(const SampledTrajectory& traj);

}  // namespace ctlqr
