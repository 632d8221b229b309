#include "ctlqr/sysid.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ctlqr/csv.hpp"
#include "ctlqr/errors.hpp"
#include "ctlqr/parallel.hpp"

namespace ctlqr {

namespace {

constexpr double kSvCutoff = 1e-12;  // relative singular-value cutoff for pseudo-inverses

bool gram_unusable(const Matrix& gram) {
  return spectral_norm(gram) <= std::numeric_limits<double>::min();
}

/// Moore-Penrose pseudo-inverse applied to a right-hand side:
/// returns pinv(gram) * rhs with singular values below cutoff zeroed.
Matrix pinv_solve(const Matrix& gram, const Matrix& rhs) {
  Eigen::JacobiSVD<Matrix> svd(gram, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cut = kSvCutoff * sv(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > cut) inv(i) = 1.0 / sv(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose() * rhs;
}

}  // namespace

void MultiTrajectoryBatch::validate() const {
  if (trajectories.empty()) throw std::invalid_argument("batch: no trajectories");
  const double h = trajectories.front().h;
  const std::size_t t0 = trajectories.front().transitions();
  if (t0 == 0) throw std::invalid_argument("batch: empty trajectories");
  if (t0 > 10) throw std::invalid_argument("batch: T0 must be at most 10");
  for (const auto& traj : trajectories) {
    if (traj.h != h || traj.transitions() != t0) {
      throw std::invalid_argument("batch: trajectories must share h and length");
    }
  }
}

std::pair<Matrix, Matrix> estimate_discrete_single(const SampledTrajectory& traj,
                                                   SysIdDiagnostics* diag) {
  const std::size_t n = traj.transitions();
  if (n == 0) throw DegenerateDataError("estimate_discrete_single: empty trajectory");
  const Eigen::Index d = traj.states.front().size();
  const Eigen::Index p = traj.actions.front().size();
  if (n < static_cast<std::size_t>(d + p)) {
    throw DegenerateDataError("estimate_discrete_single: fewer than d + p transitions");
  }

  Matrix gxx = Matrix::Zero(d, d), gxu = Matrix::Zero(d, p), guu = Matrix::Zero(p, p);
  Matrix gxy = Matrix::Zero(d, d), guy = Matrix::Zero(p, d);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector& x = traj.states[k];
    const Vector& u = traj.actions[k];
    const Vector& y = traj.states[k + 1];
    gxx.noalias() += x * x.transpose();
    gxu.noalias() += x * u.transpose();
    guu.noalias() += u * u.transpose();
    gxy.noalias() += x * y.transpose();
    guy.noalias() += u * y.transpose();
  }

  if (gram_unusable(gxx)) {
    throw DegenerateDataError("estimate_discrete_single: state Gram matrix is singular");
  }
  if (gram_unusable(guu)) {
    throw DegenerateDataError("estimate_discrete_single: action Gram matrix is singular");
  }

  // The two regression stages, iterated: A given B regresses the states,
  // B given A regresses the residuals on the actions. Their common fixed
  // point is the least-squares solution of the stacked [x; u] regression,
  // which we read off directly from the joint Gram system.
  Matrix gz = Matrix::Zero(d + p, d + p);
  gz.topLeftCorner(d, d) = gxx;
  gz.topRightCorner(d, p) = gxu;
  gz.bottomLeftCorner(p, d) = gxu.transpose();
  gz.bottomRightCorner(p, p) = guu;
  Matrix gzy(d + p, d);
  gzy.topRows(d) = gxy;
  gzy.bottomRows(p) = guy;

  const Matrix theta_t = pinv_solve(gz, gzy);  // (d+p) x d
  Matrix atilde = theta_t.topRows(d).transpose();
  Matrix btilde = theta_t.bottomRows(p).transpose();

  if (diag) {
    diag->atilde_minus_i_norm = spectral_norm(atilde - Matrix::Identity(d, d));
    diag->state_gram_min_sv = Eigen::JacobiSVD<Matrix>(gxx).singularValues().minCoeff();
    diag->samples = n;
  }
  return {std::move(atilde), std::move(btilde)};
}

std::pair<Matrix, Matrix> recover_continuous(const Matrix& Atilde, const Matrix& Btilde,
                                             double h) {
  if (!(h > 0.0)) throw std::invalid_argument("recover_continuous: h must be positive");
  const Eigen::Index d = Atilde.rows();
  if (spectral_norm(Atilde - Matrix::Identity(d, d)) > 0.5) {
    throw RecoveryDomainError("recover_continuous: ||Atilde - I|| > 1/2, log series out of domain");
  }
  Matrix ahat = logm_near_identity(Atilde) / h;
  Matrix bhat = exp_integral(ahat, h).partialPivLu().solve(Btilde);
  return {std::move(ahat), std::move(bhat)};
}

SysIdEstimate identify_single(const SampledTrajectory& traj) {
  SysIdEstimate est;
  est.h = traj.h;
  std::tie(est.Atilde, est.Btilde) = estimate_discrete_single(traj, &est.diagnostics);
  std::tie(est.Ahat, est.Bhat) = recover_continuous(est.Atilde, est.Btilde, traj.h);
  return est;
}

std::pair<Matrix, Matrix> estimate_discrete_multi(const MultiTrajectoryBatch& batch,
                                                  int threads) {
  batch.validate();
  const std::size_t n = batch.trajectories.size();
  const Eigen::Index d = batch.trajectories.front().states.front().size();
  const Eigen::Index p = batch.trajectories.front().actions.front().size();
  if (n < static_cast<std::size_t>(d + p)) {
    throw DegenerateDataError("estimate_discrete_multi: need at least d + p trajectories");
  }

  // Gram accumulation over fixed-size chunks; the chunk partials are summed
  // in chunk order afterwards, so the result is independent of the thread count.
  constexpr std::size_t kChunk = 1024;
  const std::size_t n_chunks = (n + kChunk - 1) / kChunk;
  std::vector<Matrix> gz_parts(n_chunks), gzy_parts(n_chunks);
  par::parallel_for(
      n_chunks,
      [&](std::size_t c) {
        Matrix gz = Matrix::Zero(d + p, d + p);
        Matrix gzy = Matrix::Zero(d + p, d);
        Vector z(d + p);
        const std::size_t end = std::min(n, (c + 1) * kChunk);
        for (std::size_t l = c * kChunk; l < end; ++l) {
          const auto& traj = batch.trajectories[l];
          const std::size_t t0 = traj.transitions();
          z.head(d) = traj.states[t0 - 1];
          z.tail(p) = traj.actions[t0 - 1];
          gz.noalias() += z * z.transpose();
          gzy.noalias() += z * traj.states[t0].transpose();
        }
        gz_parts[c] = std::move(gz);
        gzy_parts[c] = std::move(gzy);
      },
      threads);

  Matrix gz = Matrix::Zero(d + p, d + p);
  Matrix gzy = Matrix::Zero(d + p, d);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    gz += gz_parts[c];
    gzy += gzy_parts[c];
  }

  const auto sv = Eigen::JacobiSVD<Matrix>(gz).singularValues();
  if (sv(0) <= std::numeric_limits<double>::min() || sv.minCoeff() < kSvCutoff * sv(0)) {
    throw DegenerateDataError("estimate_discrete_multi: rank-deficient regressor Gram matrix");
  }

  const Matrix theta_t = pinv_solve(gz, gzy);
  return {theta_t.topRows(d).transpose(), theta_t.bottomRows(p).transpose()};
}

double error_transfer_bound(double eps, double h, double kappa_a, double kappa_b) {
  return (2.0 + kappa_b / kappa_a) * eps / h;
}

std::string estimate_to_csv(const SysIdEstimate& est) {
  std::string out = csv::kMatrixHeader;
  csv::append_matrix_rows(out, "Atilde", est.Atilde);
  csv::append_matrix_rows(out, "Btilde", est.Btilde);
  csv::append_matrix_rows(out, "Ahat", est.Ahat);
  csv::append_matrix_rows(out, "Bhat", est.Bhat);
  return out;
}

}  // namespace ctlqr
