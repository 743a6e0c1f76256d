#pragma once

// Independent cross-check: eliminate the dynamics and view J(x0, .) as one
// dense quadratic in the stacked control vector
//   U = (u_0; u_1; ...; u_{N-1}),   J(x0, U) = c + g'U + (1/2) U' Huu U.
// The pieces are assembled by propagating unit control impulses through the
// dynamics, never through the Riccati machinery, so agreement between the
// two routes is meaningful evidence.
//
// Eigenvalues of Huu settle solvability of the control problem for this x0:
//   - Huu indefinite                      -> J unbounded below
//   - Huu PSD, g in Range(Huu)            -> minimum attained
//   - Huu PSD (singular), g not in range  -> infimum -inf, not attained

#include <optional>

#include "lqsolve/problem.hpp"

namespace lqsolve {

struct StackedQuadratic {
  Mat Huu;   // (N*m) x (N*m), symmetric
  Vec g;     // N*m
  double c = 0.0;
  int N = 0;
  int m = 0;
};

StackedQuadratic assemble_stacked_quadratic(const LqProblem& p, const Vec& x0);

double stacked_eval(const StackedQuadratic& sq, const Vec& u_stacked);

Vec stack_controls(const ControlSequence& u);
ControlSequence unstack_controls(const Vec& u_stacked, int N, int m);

enum class OracleVerdict {
  Solvable,          // minimum attained at the reported minimizer
  ConvexUnattained,  // convex but infimum -inf (g leaves the range of Huu)
  UnboundedBelow,    // Huu indefinite
};

struct OracleReport {
  OracleVerdict verdict = OracleVerdict::Solvable;
  double lambda_min = 0.0;
  double eig_tolerance = 0.0;   // 1e-9 * (1 + ||Huu||_max)
  bool borderline = false;      // lambda_min negative but within tolerance
  bool attained = false;
  double value = 0.0;           // -inf unless attained
  std::optional<Vec> minimizer;  // minimum-norm minimizer, stacked
};

OracleReport oracle_classify(const StackedQuadratic& sq);

// lambda_min(Huu) / 2: positive iff J(0, .) is uniformly convex.
double uniform_convexity_margin(const StackedQuadratic& sq);

const char* to_string(OracleVerdict v);

}  // namespace lqsolve
