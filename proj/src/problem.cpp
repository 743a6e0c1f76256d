#include "lqsolve/problem.hpp"

#include <stdexcept>
#include <utility>

namespace lqsolve {
namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

std::string at(const std::string& name, int t) {
  return name + "[" + std::to_string(t) + "]";
}

void check_shape(const Mat& m, int rows, int cols, const std::string& what) {
  require(m.rows() == rows && m.cols() == cols,
          what + ": expected " + std::to_string(rows) + "x" + std::to_string(cols) +
              ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  require(m.allFinite(), what + ": non-finite entry");
}

// Accepts matrices symmetric within tol::kSym and returns the symmetrized
// copy; anything worse is a data error, not roundoff.
Mat accept_symmetric(const Mat& m, const std::string& what) {
  const double gap = max_norm(m - m.transpose());
  require(gap <= tol::kSym * (1.0 + max_norm(m)),
          what + ": not symmetric (max asymmetry " + std::to_string(gap) + ")");
  return symmetrized(m);
}

}  // namespace

LqProblem::LqProblem(int N_, std::vector<Mat> A_, std::vector<Mat> B_,
                     std::vector<Mat> Q_, std::vector<Mat> S_, std::vector<Mat> R_,
                     Mat H_)
    : N(N_), A(std::move(A_)), B(std::move(B_)), Q(std::move(Q_)),
      S(std::move(S_)), R(std::move(R_)), H(std::move(H_)) {
  require(N >= 1, "LqProblem: horizon N must be >= 1");
  require(!A.empty(), "LqProblem: A is empty");
  n = static_cast<int>(A[0].rows());
  require(n >= 1, "LqProblem: state dimension must be >= 1");
  require(!B.empty(), "LqProblem: B is empty");
  m = static_cast<int>(B[0].cols());
  require(m >= 1, "LqProblem: control dimension must be >= 1");

  const auto len = static_cast<std::size_t>(N);
  require(A.size() == len, "LqProblem: A has " + std::to_string(A.size()) +
                               " entries, expected N=" + std::to_string(N));
  require(B.size() == len, "LqProblem: B has " + std::to_string(B.size()) +
                               " entries, expected N=" + std::to_string(N));
  require(Q.size() == len, "LqProblem: Q has " + std::to_string(Q.size()) +
                               " entries, expected N=" + std::to_string(N));
  require(S.size() == len, "LqProblem: S has " + std::to_string(S.size()) +
                               " entries, expected N=" + std::to_string(N));
  require(R.size() == len, "LqProblem: R has " + std::to_string(R.size()) +
                               " entries, expected N=" + std::to_string(N));

  for (int t = 0; t < N; ++t) {
    check_shape(A[t], n, n, at("A", t));
    check_shape(B[t], n, m, at("B", t));
    check_shape(Q[t], n, n, at("Q", t));
    check_shape(S[t], m, n, at("S", t));
    check_shape(R[t], m, m, at("R", t));
    Q[t] = accept_symmetric(Q[t], at("Q", t));
    R[t] = accept_symmetric(R[t], at("R", t));
  }
  check_shape(H, n, n, "H");
  H = accept_symmetric(H, "H");
}

LqProblem LqProblem::constant(int N, const Mat& A, const Mat& B, const Mat& Q,
                              const Mat& S, const Mat& R, const Mat& H) {
  const auto len = static_cast<std::size_t>(N >= 0 ? N : 0);
  return LqProblem(N, std::vector<Mat>(len, A), std::vector<Mat>(len, B),
                   std::vector<Mat>(len, Q), std::vector<Mat>(len, S),
                   std::vector<Mat>(len, R), H);
}

Trajectory simulate(const LqProblem& p, const Vec& x0, const ControlSequence& u) {
  require(x0.size() == p.n, "simulate: x0 has dimension " +
                                std::to_string(x0.size()) + ", expected n=" +
                                std::to_string(p.n));
  require(u.size() == static_cast<std::size_t>(p.N),
          "simulate: control has " + std::to_string(u.size()) +
              " entries, expected N=" + std::to_string(p.N));
  Trajectory x(p.N + 1);
  x[0] = x0;
  for (int t = 0; t < p.N; ++t) {
    require(u[t].size() == p.m, "simulate: " + at("u", t) + " has dimension " +
                                    std::to_string(u[t].size()) + ", expected m=" +
                                    std::to_string(p.m));
    x[t + 1] = p.A[t] * x[t] + p.B[t] * u[t];
  }
  return x;
}

double cost(const LqProblem& p, const Vec& x0, const ControlSequence& u) {
  const Trajectory x = simulate(p, x0, u);
  double j = 0.0;
  for (int t = 0; t < p.N; ++t) {
    j += x[t].dot(p.Q[t] * x[t]) + 2.0 * u[t].dot(p.S[t] * x[t]) +
         u[t].dot(p.R[t] * u[t]);
  }
  j += x[p.N].dot(p.H * x[p.N]);
  return j;
}

FeedbackRollout simulate_feedback(const LqProblem& p, const Vec& x0,
                                  const FeedbackLaw& law) {
  require(law.window() == static_cast<std::size_t>(p.N),
          "simulate_feedback: law covers " + std::to_string(law.window()) +
              " steps of an N=" + std::to_string(p.N) +
              " horizon; use apply_weak_law for a truncated window");
  require(law.v.size() == law.K.size(),
          "simulate_feedback: K and v lengths differ");
  require(x0.size() == p.n, "simulate_feedback: x0 has dimension " +
                                std::to_string(x0.size()) + ", expected n=" +
                                std::to_string(p.n));
  FeedbackRollout r;
  r.x.resize(p.N + 1);
  r.u.resize(p.N);
  r.x[0] = x0;
  for (int t = 0; t < p.N; ++t) {
    require(law.K[t].rows() == p.m && law.K[t].cols() == p.n,
            "simulate_feedback: " + at("K", t) + " has wrong shape");
    require(law.v[t].size() == p.m,
            "simulate_feedback: " + at("v", t) + " has wrong dimension");
    // Realized control first, then the same dynamics as simulate(); replaying
    // r.u through simulate() therefore reproduces r.x bit for bit.
    r.u[t] = law.K[t] * r.x[t] + law.v[t];
    r.x[t + 1] = p.A[t] * r.x[t] + p.B[t] * r.u[t];
  }
  return r;
}

}  // namespace lqsolve
