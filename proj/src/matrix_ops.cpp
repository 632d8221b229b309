#include "ctlqr/matrix_ops.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "ctlqr/errors.hpp"

namespace ctlqr {

namespace {

void require_square_finite(const Matrix& m, const char* who) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw std::invalid_argument(std::string(who) + ": matrix must be square and non-empty");
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) + ": non-finite entries");
  }
}

/// Taylor core of e^M for ||M|| <= 1/2, terms until term-norm < 1e-16 * result-norm.
Matrix expm_taylor_core(const Matrix& m) {
  const Eigen::Index d = m.rows();
  Matrix result = Matrix::Identity(d, d) + m;
  Matrix term = m;
  for (int k = 2; k <= 64; ++k) {
    term = (term * m) / static_cast<double>(k);
    result += term;
    if (term.norm() < 1e-16 * result.norm()) return result;
  }
  throw NumericError("expm: Taylor core did not converge (scaling failed)");
}

}  // namespace

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

Matrix expm(const Matrix& a, double t) {
  require_square_finite(a, "expm");
  if (!std::isfinite(t)) throw std::invalid_argument("expm: non-finite time");

  Matrix m = a * t;
  const double scale = m.cwiseAbs().rowwise().sum().maxCoeff();  // inf-norm
  int squarings = 0;
  if (scale > 0.5) {
    squarings = static_cast<int>(std::ceil(std::log2(scale / 0.5)));
    m *= std::ldexp(1.0, -squarings);
  }
  Matrix result = expm_taylor_core(m);
  for (int i = 0; i < squarings; ++i) result = result * result;
  return result;
}

Matrix logm_near_identity(const Matrix& m) {
  require_square_finite(m, "logm_near_identity");
  const Eigen::Index d = m.rows();
  const Matrix e = m - Matrix::Identity(d, d);
  if (spectral_norm(e) > 0.5) {
    throw std::domain_error(
        "logm_near_identity: ||M - I|| > 1/2, series not reliable at the required accuracy");
  }
  Matrix result = e;
  Matrix power = e;
  for (int k = 2; k <= 200; ++k) {
    power = power * e;
    const Matrix term = power / static_cast<double>(k);
    if (k % 2 == 0) {
      result -= term;
    } else {
      result += term;
    }
    if (term.norm() < 1e-15) break;
  }
  return result;
}

double stability_margin(const Matrix& a) {
  require_square_finite(a, "stability_margin");
  if (a.rows() == 1) return a(0, 0);

  Eigen::RealSchur<Matrix> schur(a);
  if (schur.info() != Eigen::Success) {
    throw NumericError("stability_margin: Schur iteration did not converge");
  }
  const Matrix& t = schur.matrixT();
  const Eigen::Index d = t.rows();
  double margin = -std::numeric_limits<double>::infinity();
  Eigen::Index i = 0;
  while (i < d) {
    if (i + 1 < d && t(i + 1, i) != 0.0) {
      // 2x2 block: conjugate pair with real part = half the block trace.
      margin = std::max(margin, 0.5 * (t(i, i) + t(i + 1, i + 1)));
      i += 2;
    } else {
      margin = std::max(margin, t(i, i));
      i += 1;
    }
  }
  return margin;
}

Matrix exp_integral(const Matrix& a, double h) {
  require_square_finite(a, "exp_integral");
  if (!(h > 0.0)) throw std::invalid_argument("exp_integral: h must be positive");
  const Eigen::Index d = a.rows();
  Matrix block = Matrix::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = a;
  block.topRightCorner(d, d) = Matrix::Identity(d, d);
  return expm(block, h).topRightCorner(d, d);
}

Matrix noise_covariance(const Matrix& a, double h) {
  require_square_finite(a, "noise_covariance");
  if (!(h > 0.0)) throw std::invalid_argument("noise_covariance: h must be positive");
  const Eigen::Index d = a.rows();
  Matrix block = Matrix::Zero(2 * d, 2 * d);
  block.topLeftCorner(d, d) = -a;
  block.topRightCorner(d, d) = Matrix::Identity(d, d);
  block.bottomRightCorner(d, d) = a.transpose();
  const Matrix e = expm(block, h);
  const Matrix sigma = e.bottomRightCorner(d, d).transpose() * e.topRightCorner(d, d);
  return 0.5 * (sigma + sigma.transpose());
}

}  // namespace ctlqr
