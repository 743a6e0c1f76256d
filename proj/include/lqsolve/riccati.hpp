#pragma once

// Generalized backward Riccati recursion for possibly indefinite weights,
// plus the closed-loop solvability test built on it.
//
//   P_N = H
//   Rhat_t  = R_t + B_t' P_{t+1} B_t
//   cross_t = B_t' P_{t+1} A_t + S_t
//   P_t = Q_t + A_t' P_{t+1} A_t - cross_t' Rhat_t^+ cross_t
//
// where ^+ is the Moore-Penrose pseudoinverse. The problem is closed-loop
// solvable iff at every step
//   (a) Rhat_t is positive semidefinite,
//   (b) the hat-gain Khat_t = -Rhat_t^+ cross_t is finite, and
//   (c) Range(cross_t) is contained in Range(Rhat_t).
// The optimal gains then are K_t = Khat_t (plus arbitrary kernel terms, which
// this implementation pins to zero), v_t = 0, and the value is x0' P_0 x0.

#include <optional>
#include <vector>

#include "lqsolve/problem.hpp"

namespace lqsolve {

struct StepRegularity {
  PsdVerdict psd;             // verdict on Rhat_t
  bool psd_borderline = false;  // min eigenvalue in [-tolerance_used, 0)
  bool gain_finite = false;
  bool range_ok = false;

  bool regular() const { return psd.is_psd && gain_finite && range_ok; }
};

struct RiccatiSolution {
  std::vector<Mat> P;      // N+1 symmetric matrices, P[N] = H
  std::vector<Mat> Rhat;   // N
  std::vector<Mat> cross;  // N
  std::vector<Mat> Khat;   // N, the pseudoinverse gains
  std::vector<StepRegularity> regularity;  // N
};

// Runs the recursion above; never refuses indefinite data. Each P_t is
// symmetrized before reuse. Throws std::runtime_error naming the step if an
// intermediate overflows to non-finite values.
RiccatiSolution solve_generalized_riccati(const LqProblem& p);

enum class RegularityCondition { Psd, GainFinite, RangeInclusion };

struct ClosedLoopCheck {
  bool solvable = false;
  struct Violation {
    int t = 0;
    RegularityCondition condition = RegularityCondition::Psd;
  };
  // First failing step, scanning t = 0..N-1 with conditions tested in the
  // order (a) PSD, (b) finite gain, (c) range inclusion.
  std::optional<Violation> first_violation;
};

ClosedLoopCheck check_closed_loop_solvable(const RiccatiSolution& sol);

const char* to_string(RegularityCondition c);

enum class PolicyProvenance { ExactRiccati, Perturbed, WeakLimit };

struct ClosedLoopPolicy {
  FeedbackLaw law;
  PolicyProvenance provenance = PolicyProvenance::ExactRiccati;
  // The regular steps leave additive kernel freedom in both K_t and v_t;
  // this implementation always selects the zero element.
  bool free_params_zeroed = true;
};

// Optimal feedback for a closed-loop-solvable problem. Throws
// std::invalid_argument carrying the first violated condition otherwise.
ClosedLoopPolicy closed_loop_policy(const RiccatiSolution& sol);

// V(x0) = x0' P_0 x0; requires closed-loop solvability like the policy.
double value_function(const RiccatiSolution& sol, const Vec& x0);

// Completion-of-squares identity: for any admissible control u,
//   J(x0,u) - x0'P_0 x0 = sum_t (u_t - Khat_t x_t)' Rhat_t (u_t - Khat_t x_t)
// along the trajectory generated by u. Returns the identity's residual
// (left side minus right side); on solvable problems it is roundoff-sized.
double completion_of_squares_residual(const LqProblem& p, const RiccatiSolution& sol,
                                      const Vec& x0, const ControlSequence& u);

// Classical recursion for the strictly convex case: identical formulas with
// a plain inverse of Rhat_t. Throws std::runtime_error if some Rhat_t is
// singular. Serves as the fast path and as an independent cross-check of the
// pseudoinverse recursion.
struct ClassicalRiccati {
  std::vector<Mat> P;  // N+1
  std::vector<Mat> K;  // N
};
ClassicalRiccati solve_classical_riccati(const LqProblem& p);

}  // namespace lqsolve
