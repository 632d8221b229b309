#pragma once

#include <utility>
#include <vector>

#include "ctlqr/matrix_ops.hpp"
#include "ctlqr/sde.hpp"

namespace ctlqr {

struct SysIdDiagnostics {
  double atilde_minus_i_norm = 0.0;  // ||Atilde - I|| (spectral)
  double state_gram_min_sv = 0.0;    // smallest singular value of sum x_k x_k'
  std::size_t samples = 0;           // transition count
};

/// Discrete-level estimates (Atilde, Btilde) and the recovered
/// continuous-level pair (Ahat, Bhat) with Ahat = log(Atilde)/h.
struct SysIdEstimate {
  Matrix Atilde;
  Matrix Btilde;
  Matrix Ahat;
  Matrix Bhat;
  double h = 0.0;
  SysIdDiagnostics diagnostics;
};

/// Independent short trajectories sharing h and length T0 (T0 <= 10).
struct MultiTrajectoryBatch {
  std::vector<SampledTrajectory> trajectories;

  /// Throws std::invalid_argument if h or length differ across
  /// trajectories or T0 exceeds 10.
  void validate() const;
  std::size_t T0() const { return trajectories.empty() ? 0 : trajectories.front().transitions(); }
};

/// Least squares for the discrete transition x_{k+1} = A x_k + B u_k + w_k
/// from a single trajectory. The two regression stages (A from states, B
/// from the residuals against the actions) are iterated to their joint
/// fixed point; pseudo-inverses use an SVD with relative cutoff 1e-12.
/// Throws DegenerateDataError when there are fewer than d + p transitions
/// or a Gram matrix has no usable direction.
std::pair<Matrix, Matrix> estimate_discrete_single(const SampledTrajectory& traj,
                                                   SysIdDiagnostics* diag = nullptr);

/// Inverts the exact discretization: Ahat = log(Atilde)/h via the
/// near-identity series and Bhat = [integral of e^{Ahat t} dt]^{-1} Btilde.
/// Throws RecoveryDomainError when ||Atilde - I|| > 1/2.
std::pair<Matrix, Matrix> recover_continuous(const Matrix& Atilde, const Matrix& Btilde, double h);

/// Single-trajectory identification: discrete least squares followed by
/// continuous recovery.
SysIdEstimate identify_single(const SampledTrajectory& traj);

/// Joint least squares over the final transition of each trajectory,
/// regressing x_{T0} on the stacked [x_{T0-1}; u_{T0-1}]. Requires at least
/// d + p trajectories and a full-rank regressor Gram matrix.
std::pair<Matrix, Matrix> estimate_discrete_multi(const MultiTrajectoryBatch& batch,
                                                  int threads = 0);

/// Worst-case transfer of a discrete-level error eps to the continuous
/// level: (1/h) (2 + kappa_B / kappa_A) eps.
double error_transfer_bound(double eps, double h, double kappa_a, double kappa_b);

/// CSV rows `matrix,row,col,value` for Atilde/Btilde/Ahat/Bhat.
std::string estimate_to_csv(const SysIdEstimate& est);

}  // namespace ctlqr
