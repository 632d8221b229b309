#pragma once

#include <Eigen/Dense>

namespace ctlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Largest singular value (operator 2-norm).
double spectral_norm(const Matrix& m);

/// e^{At} by scaling-and-squaring over a truncated Taylor core.
/// Throws std::invalid_argument on non-finite input.
Matrix expm(const Matrix& a, double t);

/// Principal logarithm of a matrix near the identity via the Mercator
/// series sum_{k>=1} (-1)^{k-1} (M-I)^k / k. Requires ||M - I|| <= 1/2
/// (spectral norm); throws std::domain_error outside that ball. Terms are
/// added until the term norm falls below 1e-15, capped at 200 terms.
Matrix logm_near_identity(const Matrix& m);

/// Spectral abscissa alpha(A): the maximum real part over eigenvalues.
/// A is stable iff stability_margin(A) < 0. Computed from the real Schur
/// form; throws NumericError if the QR iteration fails to converge.
double stability_margin(const Matrix& a);

/// Integral of e^{At} over [0, h], via the exponential of the augmented
/// block [[A, I], [0, 0]] so a single expm call carries the quadrature.
Matrix exp_integral(const Matrix& a, double h);

/// Noise covariance of the exact interval-h transition of dX = AX dt + dW:
/// Sigma = integral over [0,h] of e^{As} e^{A's} ds, computed from the
/// exponential of [[-A, I], [0, A']] and symmetrized.
Matrix noise_covariance(const Matrix& a, double h);

}  // namespace ctlqr
