#include "ctlqr/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>
#include <stdexcept>

#include "ctlqr/csv.hpp"
#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

double care_residual(const Matrix& a, const Matrix& b, const LqrWeights& w, const Matrix& p) {
  const Matrix rinv_btp = w.R.llt().solve(b.transpose() * p);
  return spectral_norm(p * b * rinv_btp - a.transpose() * p - p * a - w.Q);
}

}  // namespace

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
  if (a.rows() != a.cols() || q.rows() != q.cols() || a.rows() != q.rows()) {
    throw std::invalid_argument("solve_lyapunov: dimension mismatch");
  }
  if (stability_margin(a) >= 0.0) {
    throw StabilityError("solve_lyapunov: A is not stable");
  }
  const Eigen::Index d = a.rows();
  const Matrix id = Matrix::Identity(d, d);
  const Matrix at = a.transpose();
  const Matrix system = kron(id, at) + kron(at, id);
  const Eigen::Map<const Vector> vec_q(q.data(), d * d);
  const Vector vec_x = system.partialPivLu().solve(-vec_q);
  Matrix x = Eigen::Map<const Matrix>(vec_x.data(), d, d);
  x = 0.5 * (x + x.transpose()).eval();

  const double qn = spectral_norm(q);
  if (spectral_norm(at * x + x * a + q) > 1e-10 * (1.0 + qn)) {
    throw NumericError("solve_lyapunov: residual above tolerance");
  }
  return x;
}

RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const LqrWeights& weights,
                           const Matrix& k0) {
  if (stability_margin(a + b * k0) >= 0.0) {
    throw StabilityError("solve_care: K0 does not stabilize (A, B)");
  }
  constexpr int kMaxIterations = 100;
  constexpr double kResidualTol = 1e-9;
  constexpr double kStepTol = 1e-12;

  Matrix k = k0;
  Matrix p_prev;
  for (int i = 1; i <= kMaxIterations; ++i) {
    const Matrix a_cl = a + b * k;
    Matrix s = weights.Q + k.transpose() * weights.R * k;
    s = 0.5 * (s + s.transpose()).eval();
    const Matrix p = solve_lyapunov(a_cl, s);
    const double residual = care_residual(a, b, weights, p);
    if (residual <= kResidualTol || (i > 1 && (p - p_prev).norm() <= kStepTol)) {
      return {p, residual, i};
    }
    k = optimal_gain(p, b, weights);
    p_prev = p;
  }
  throw NumericError("solve_care: Kleinman iteration did not reach tolerance");
}

Matrix optimal_gain(const Matrix& p, const Matrix& b, const LqrWeights& weights) {
  return -weights.R.llt().solve(b.transpose() * p);
}

double stationary_cost_rate(const ContinuousSystem& sys, const LqrWeights& weights,
                            const Matrix& k) {
  Matrix s = weights.Q + k.transpose() * weights.R * k;
  s = 0.5 * (s + s.transpose()).eval();
  return solve_lyapunov(sys.A + sys.B * k, s).trace();
}

FiniteCostTerms expected_cost_finite_terms(const ContinuousSystem& sys, const LqrWeights& weights,
                                           const Matrix& k, const Vector& x0, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("expected_cost_finite: T must be positive");
  const Matrix m = sys.A + sys.B * k;
  Matrix s = weights.Q + k.transpose() * weights.R * k;
  s = 0.5 * (s + s.transpose()).eval();
  const double alpha = stability_margin(m);
  if (alpha >= 0.0) throw StabilityError("expected_cost_finite: A + BK is not stable");

  // Both integrands decay like e^{2 alpha t}; past 40/|alpha| the tail is
  // below double precision, so the quadrature stops there.
  const double t_end = std::min(T, 40.0 / -alpha);
  const double base_step = std::min(0.01 / -alpha, T / 64.0);

  const auto simpson = [&](double step) {
    auto n = static_cast<std::size_t>(std::ceil(t_end / step));
    n += n % 2;
    if (n < 2) n = 2;
    const double dt = t_end / static_cast<double>(n);
    const Matrix e = expm(m, dt);
    Matrix phi = Matrix::Identity(m.rows(), m.cols());
    FiniteCostTerms acc;
    for (std::size_t j = 0; j <= n; ++j) {
      const double t = dt * static_cast<double>(j);
      const double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      const Vector v = phi * x0;
      acc.state_term += w * v.dot(s * v);
      acc.noise_term += w * (T - t) * (s * phi).cwiseProduct(phi).sum();
      if (j < n) phi = phi * e;
    }
    acc.state_term *= dt / 3.0;
    acc.noise_term *= dt / 3.0;
    return acc;
  };

  const FiniteCostTerms coarse = simpson(base_step);
  const FiniteCostTerms fine = simpson(base_step / 2.0);
  if (std::abs(fine.total() - coarse.total()) > 1e-3 * (std::abs(fine.total()) + 1e-12)) {
    throw NumericError("expected_cost_finite: quadrature did not confirm to 0.1%");
  }
  return fine;
}

double expected_cost_finite(const ContinuousSystem& sys, const LqrWeights& weights,
                            const Matrix& k, const Vector& x0, double T) {
  return expected_cost_finite_terms(sys, weights, k, x0, T).total();
}

std::string riccati_to_csv(const Matrix& p, const Matrix& k) {
  std::string out = csv::kMatrixHeader;
  csv::append_matrix_rows(out, "P", p);
  csv::append_matrix_rows(out, "K", k);
  return out;
}

Matrix shifted_stabilizer(const Matrix& a, const Matrix& b, double beta) {
  if (!(beta > 0.0) || beta <= stability_margin(-a)) {
    throw std::invalid_argument("shifted_stabilizer: beta must exceed -min Re(eig(A))");
  }
  const Matrix shifted = a + beta * Matrix::Identity(a.rows(), a.cols());
  const Matrix p = solve_lyapunov(-shifted.transpose(), 2.0 * b * b.transpose());
  Eigen::LLT<Matrix> llt(p);
  if (llt.info() != Eigen::Success) {
    throw NumericError("shifted_stabilizer: (A, B) appears uncontrollable");
  }
  return -llt.solve(b).transpose();
}

}  // namespace ctlqr
