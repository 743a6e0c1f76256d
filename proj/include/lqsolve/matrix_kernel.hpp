#pragma once

// Dense linear-algebra primitives shared by the solver modules: Moore-Penrose
// pseudoinverse with an explicit numerical-rank cutoff, a tolerance-aware
// positive-semidefiniteness verdict, and a range-inclusion test.
//
// All tolerances are relative, scaled by (1 + max-norm of the operand), so the
// same defaults behave sensibly across problem scales.

#include <Eigen/Dense>

namespace lqsolve {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

namespace tol {
// Symmetry acceptance for weight matrices: reject beyond, symmetrize within.
inline constexpr double kSym = 1e-9;
// Singular values below kRank * sigma_max are treated as zero.
inline constexpr double kRank = 1e-11;
// Eigenvalue slack for the PSD verdict.
inline constexpr double kPsd = 1e-9;
// Residual slack for the range-inclusion test.
inline constexpr double kRange = 1e-9;
}  // namespace tol

// Max-norm (largest absolute entry); 0 for an empty matrix.
double max_norm(const Mat& m);

// (m + m') / 2.
Mat symmetrized(const Mat& m);

// Moore-Penrose pseudoinverse via SVD. Singular values sigma_i with
// sigma_i <= rank_tol * sigma_max are zeroed; the zero matrix maps to the
// zero matrix of transposed shape. Throws std::invalid_argument on
// non-finite input.
Mat pinv(const Mat& m, double rank_tol = tol::kRank);

struct PsdVerdict {
  bool is_psd = false;
  double min_eigenvalue = 0.0;
  double tolerance_used = 0.0;  // tol * (1 + ||m||_max)
};

// Eigenvalue-based PSD test: is_psd iff min eigenvalue >= -tolerance_used.
// The input must be symmetric within tol::kSym (relative); otherwise throws.
PsdVerdict is_psd(const Mat& m, double tolerance = tol::kPsd);

// True iff Range(x) is contained in Range(y), tested as
//   || y * pinv(y) * x - x ||_max <= tolerance * (1 + ||x||_max).
// x and y must have the same number of rows.
bool range_included(const Mat& x, const Mat& y, double tolerance = tol::kRange);

}  // namespace lqsolve
