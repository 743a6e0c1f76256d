#pragma once

// Finite-horizon discrete-time LQ problem data and trajectory arithmetic.
//
// Dynamics   x_{t+1} = A_t x_t + B_t u_t,              t = 0..N-1
// Cost       J(x0,u) = sum_t [ x_t'Q_t x_t + 2 u_t'S_t x_t + u_t'R_t u_t ]
//                      + x_N' H x_N
//
// Q_t, R_t and H are required to be symmetric but may be indefinite; that is
// the whole point of the solver built on top of this type. Weight matrices
// are symmetrized on construction and inputs that are asymmetric beyond
// tol::kSym are rejected.

#include <string>
#include <vector>

#include "lqsolve/matrix_kernel.hpp"

namespace lqsolve {

// u_t for t = 0..N-1.
using ControlSequence = std::vector<Vec>;
// x_t for t = 0..N; one entry longer than the control sequence.
using Trajectory = std::vector<Vec>;

struct LqProblem {
  int N = 0;  // horizon length, >= 1
  int n = 0;  // state dimension
  int m = 0;  // control dimension
  std::vector<Mat> A;  // N matrices, n x n
  std::vector<Mat> B;  // N matrices, n x m
  std::vector<Mat> Q;  // N matrices, n x n, symmetric
  std::vector<Mat> S;  // N matrices, m x n
  std::vector<Mat> R;  // N matrices, m x m, symmetric
  Mat H;               // n x n, symmetric

  // Validates dimensions, finiteness and symmetry; stores symmetrized
  // weights. Throws std::invalid_argument naming the offending entry.
  LqProblem(int N, std::vector<Mat> A, std::vector<Mat> B, std::vector<Mat> Q,
            std::vector<Mat> S, std::vector<Mat> R, Mat H);

  // Convenience for time-invariant data: repeats each matrix N times.
  static LqProblem constant(int N, const Mat& A, const Mat& B, const Mat& Q,
                            const Mat& S, const Mat& R, const Mat& H);
};

// Time-varying affine state feedback u_t = K_t x_t + v_t. The law is defined
// on the window t = 0..K.size()-1, which is either the full horizon or a
// truncated prefix (weak closed-loop gains stop at N-2).
struct FeedbackLaw {
  std::vector<Mat> K;
  std::vector<Vec> v;  // same length as K

  std::size_t window() const { return K.size(); }
};

struct FeedbackRollout {
  Trajectory x;        // N+1 states
  ControlSequence u;   // realized open-loop control, N entries
};

// Rolls the dynamics forward under an open-loop control.
Trajectory simulate(const LqProblem& p, const Vec& x0, const ControlSequence& u);

// Evaluates J(x0, u) along the simulated trajectory.
double cost(const LqProblem& p, const Vec& x0, const ControlSequence& u);

// Closes the loop over the full horizon: u_t = K_t x_t + v_t, then
// x_{t+1} = A_t x_t + B_t u_t. Requires law.window() == N; a shorter window
// is an error directing the caller to apply_weak_law, which knows how to
// finish the tail.
FeedbackRollout simulate_feedback(const LqProblem& p, const Vec& x0,
                                  const FeedbackLaw& law);

}  // namespace lqsolve
