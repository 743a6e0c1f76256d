#pragma once

// Shared fixtures and generators for the unit tests. Random draws always go
// through a caller-owned std::mt19937 with a fixed seed so failures replay.

#include <random>
#include <vector>

#include "lqsolve/problem.hpp"

namespace testsup {

using lqsolve::ControlSequence;
using lqsolve::LqProblem;
using lqsolve::Mat;
using lqsolve::Vec;

// Scalar two-step problem with R = -1 and unit dynamics: not closed-loop
// solvable (range condition fails at t = 0) yet open-loop solvable for
// every x0, with minimizers characterized by u_0 + u_1 = -x0.
inline LqProblem scalar_indefinite() {
  const Mat one = Mat::Constant(1, 1, 1.0);
  const Mat zero = Mat::Zero(1, 1);
  return LqProblem::constant(2, one, one, zero, zero, -one, one);
}

// Same dynamics with unit convex weights; strictly convex in the controls.
inline LqProblem scalar_convex() {
  const Mat one = Mat::Constant(1, 1, 1.0);
  const Mat zero = Mat::Zero(1, 1);
  return LqProblem::constant(2, one, one, one, zero, one, one);
}

inline Mat random_matrix(std::mt19937& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Mat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline Vec random_vector(std::mt19937& rng, int n, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

inline ControlSequence random_controls(std::mt19937& rng, int N, int m,
                                       double scale = 1.0) {
  ControlSequence u;
  u.reserve(N);
  for (int t = 0; t < N; ++t) u.push_back(random_vector(rng, m, scale));
  return u;
}

// Strictly convex instance: R_t = G'G + 0.1 I keeps every control kernel
// positive definite, Q_t and H are Gram matrices, S_t = 0.
inline LqProblem random_convex_problem(std::mt19937& rng, int max_N = 8,
                                       int max_n = 3, int max_m = 2) {
  std::uniform_int_distribution<int> pick_N(1, max_N), pick_n(1, max_n),
      pick_m(1, max_m);
  const int N = pick_N(rng), n = pick_n(rng), m = pick_m(rng);
  std::vector<Mat> A, B, Q, S, R;
  for (int t = 0; t < N; ++t) {
    A.push_back(random_matrix(rng, n, n));
    B.push_back(random_matrix(rng, n, m));
    const Mat q0 = random_matrix(rng, n, n);
    Q.push_back(q0.transpose() * q0);
    S.push_back(Mat::Zero(m, n));
    const Mat r0 = random_matrix(rng, m, m);
    R.push_back(r0.transpose() * r0 + 0.1 * Mat::Identity(m, m));
  }
  const Mat h0 = random_matrix(rng, n, n);
  return LqProblem(N, A, B, Q, S, R, h0.transpose() * h0);
}

// Arbitrary-sign weights; may be solvable, unbounded, or anything between.
inline LqProblem random_indefinite_problem(std::mt19937& rng, int max_N = 6,
                                           int max_n = 3, int max_m = 2) {
  std::uniform_int_distribution<int> pick_N(1, max_N), pick_n(1, max_n),
      pick_m(1, max_m);
  const int N = pick_N(rng), n = pick_n(rng), m = pick_m(rng);
  std::vector<Mat> A, B, Q, S, R;
  for (int t = 0; t < N; ++t) {
    A.push_back(random_matrix(rng, n, n));
    B.push_back(random_matrix(rng, n, m));
    Mat q = random_matrix(rng, n, n);
    Q.push_back(0.5 * (q + q.transpose()));
    S.push_back(random_matrix(rng, m, n));
    Mat r = random_matrix(rng, m, m);
    R.push_back(0.5 * (r + r.transpose()));
  }
  Mat h = random_matrix(rng, n, n);
  return LqProblem(N, A, B, Q, S, R, 0.5 * (h + h.transpose()));
}

// Instance whose perturbed controls blow up as epsilon shrinks: the control
// never reaches the state (B = 0), one control coordinate carries a strictly
// negative quadratic weight, and another has zero weight but a linear term
// injected through S. The stacked Hessian is indefinite and the epsilon-
// optimal controls grow like 1/epsilon.
inline LqProblem divergent_indefinite_problem(std::mt19937& rng, int N = 2) {
  std::uniform_real_distribution<double> neg(-2.0, -0.5), pos(0.5, 2.0);
  const int n = 2, m = 2;
  const Mat A = Mat::Identity(n, n);
  const Mat B = Mat::Zero(n, m);
  const Mat Q = Mat::Zero(n, n);
  Mat S = Mat::Zero(m, n);
  S(1, 0) = pos(rng);
  Mat R = Mat::Zero(m, m);
  R(0, 0) = neg(rng);
  const Mat H = Mat::Zero(n, n);
  return LqProblem::constant(N, A, B, Q, S, R, H);
}

}  // namespace testsup
