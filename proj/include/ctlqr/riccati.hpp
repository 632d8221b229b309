#pragma once

#include <string>

#include "ctlqr/matrix_ops.hpp"
#include "ctlqr/sde.hpp"

namespace ctlqr {

/// Quadratic cost weights; both symmetric positive definite.
struct LqrWeights {
  Matrix Q;  // d x d
  Matrix R;  // p x p
};

struct RiccatiSolution {
  Matrix P;
  double residual = 0.0;  // ||P B R^-1 B' P - A' P - P A - Q|| (spectral)
  int iterations = 0;
};

/// Unique symmetric solution of A'X + XA + Q = 0 for stable A, equal to the
/// integral over [0, inf) of e^{A't} Q e^{At} dt. Solved by Kronecker
/// vectorization and a dense d^2 x d^2 LU; residual checked against
/// 1e-10 * (1 + ||Q||). Throws StabilityError when alpha(A) >= 0.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

/// Stationary Riccati equation P B R^-1 B' P - A'P - PA - Q = 0 by the
/// Kleinman-Newton iteration: each step solves one Lyapunov equation in the
/// current closed loop and updates the gain. K0 must stabilize (A, B).
/// Stops at residual <= 1e-9 or ||P_k - P_{k-1}|| <= 1e-12, cap 100.
RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const LqrWeights& weights,
                           const Matrix& k0);

/// K = -R^-1 B' P.
Matrix optimal_gain(const Matrix& p, const Matrix& b, const LqrWeights& weights);

/// Steady-state cost per unit time of the fixed gain K:
/// tr of the Lyapunov solution for (A + BK, Q + K'RK). Requires A + BK stable.
double stationary_cost_rate(const ContinuousSystem& sys, const LqrWeights& weights,
                            const Matrix& k);

/// The two terms of the exact finite-horizon expected cost under U_t = K X_t
/// driven by standard Brownian noise:
///   state_term = integral over [0,T] of x0' e^{M't} S e^{Mt} x0 dt
///   noise_term = integral over [0,T] of (T - t) tr(e^{M't} S e^{Mt}) dt
/// with M = A + BK and S = Q + K'RK. Under noise scale sigma the expected
/// cost is state_term + sigma^2 * noise_term.
struct FiniteCostTerms {
  double state_term = 0.0;
  double noise_term = 0.0;
  double total() const { return state_term + noise_term; }
};

/// Composite Simpson quadrature of the closed-form integrands at step
/// min(0.01/|alpha(M)|, T/64), with one halving to confirm the result to
/// 0.1% relative error. Throws StabilityError when A + BK is not stable.
FiniteCostTerms expected_cost_finite_terms(const ContinuousSystem& sys, const LqrWeights& weights,
                                           const Matrix& k, const Vector& x0, double T);

/// state_term + noise_term of the above (unit noise scale).
double expected_cost_finite(const ContinuousSystem& sys, const LqrWeights& weights,
                            const Matrix& k, const Vector& x0, double T);

/// CSV rows `matrix,row,col,value` for the Riccati solution P and gain K.
std::string riccati_to_csv(const Matrix& p, const Matrix& k);

/// Stabilizing gain by eigenvalue shifting: the gain K = -B' P^-1 with P
/// solving (A + beta I) P + P (A + beta I)' = 2 B B' places every
/// closed-loop eigenvalue real part at exactly -beta. Needs beta larger
/// than -min Re(eig(A)) so the shifted matrix clears the origin, and
/// (A, B) controllable; throws NumericError otherwise.
Matrix shifted_stabilizer(const Matrix& a, const Matrix& b, double beta);

}  // namespace ctlqr
