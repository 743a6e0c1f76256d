#include "lqsolve/matrix_kernel.hpp"

#include <stdexcept>

namespace lqsolve {

double max_norm(const Mat& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().maxCoeff();
}

Mat symmetrized(const Mat& m) { return (m + m.transpose()) / 2.0; }

Mat pinv(const Mat& m, double rank_tol) {
  if (!m.allFinite()) {
    throw std::invalid_argument("pinv: input has non-finite entries");
  }
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sigma = svd.singularValues();
  const double cutoff = rank_tol * (sigma.size() > 0 ? sigma(0) : 0.0);
  Vec inv = Vec::Zero(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma(i) > cutoff && sigma(i) > 0.0) inv(i) = 1.0 / sigma(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

PsdVerdict is_psd(const Mat& m, double tolerance) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("is_psd: matrix is not square");
  }
  const double scale = 1.0 + max_norm(m);
  if (max_norm(m - m.transpose()) > tol::kSym * scale) {
    throw std::invalid_argument("is_psd: matrix is not symmetric within tolerance");
  }
  Eigen::SelfAdjointEigenSolver<Mat> eig(symmetrized(m), Eigen::EigenvaluesOnly);
  PsdVerdict v;
  v.min_eigenvalue = eig.eigenvalues().minCoeff();
  v.tolerance_used = tolerance * scale;
  v.is_psd = v.min_eigenvalue >= -v.tolerance_used;
  return v;
}

bool range_included(const Mat& x, const Mat& y, double tolerance) {
  if (x.rows() != y.rows()) {
    throw std::invalid_argument("range_included: row counts differ");
  }
  // Projection onto Range(y); the test asks whether it fixes every column of x.
  const Mat residual = y * (pinv(y) * x) - x;
  return max_norm(residual) <= tolerance * (1.0 + max_norm(x));
}

}  // namespace lqsolve
