#include "lqsolve/riccati.hpp"

#include <stdexcept>
#include <string>

namespace lqsolve {

RiccatiSolution solve_generalized_riccati(const LqProblem& p) {
  RiccatiSolution sol;
  sol.P.resize(p.N + 1);
  sol.Rhat.resize(p.N);
  sol.cross.resize(p.N);
  sol.Khat.resize(p.N);
  sol.regularity.resize(p.N);

  sol.P[p.N] = p.H;
  for (int t = p.N - 1; t >= 0; --t) {
    const Mat& Pn = sol.P[t + 1];
    const Mat PnB = Pn * p.B[t];
    Mat rhat = symmetrized(p.R[t] + p.B[t].transpose() * PnB);
    Mat cross = PnB.transpose() * p.A[t] + p.S[t];  // B'P_{t+1}A + S
    const Mat rhat_pinv = pinv(rhat);
    Mat khat = -rhat_pinv * cross;

    // P stays exactly symmetric, so A'P_{t+1}B + S' == cross'.
    sol.P[t] = symmetrized(p.Q[t] + p.A[t].transpose() * Pn * p.A[t] -
                           cross.transpose() * rhat_pinv * cross);
    if (!sol.P[t].allFinite()) {
      throw std::runtime_error("riccati: non-finite P at step t=" + std::to_string(t));
    }

    StepRegularity reg;
    reg.psd = is_psd(rhat);
    reg.psd_borderline = reg.psd.is_psd && reg.psd.min_eigenvalue < 0.0;
    reg.gain_finite = khat.allFinite();
    reg.range_ok = range_included(cross, rhat);

    sol.Rhat[t] = std::move(rhat);
    sol.cross[t] = std::move(cross);
    sol.Khat[t] = std::move(khat);
    sol.regularity[t] = reg;
  }
  return sol;
}

ClosedLoopCheck check_closed_loop_solvable(const RiccatiSolution& sol) {
  ClosedLoopCheck check;
  check.solvable = true;
  for (int t = 0; t < static_cast<int>(sol.regularity.size()); ++t) {
    const StepRegularity& reg = sol.regularity[t];
    RegularityCondition failed;
    if (!reg.psd.is_psd) {
      failed = RegularityCondition::Psd;
    } else if (!reg.gain_finite) {
      failed = RegularityCondition::GainFinite;
    } else if (!reg.range_ok) {
      failed = RegularityCondition::RangeInclusion;
    } else {
      continue;
    }
    check.solvable = false;
    check.first_violation = {t, failed};
    break;
  }
  return check;
}

const char* to_string(RegularityCondition c) {
  switch (c) {
    case RegularityCondition::Psd:
      return "kernel not positive semidefinite";
    case RegularityCondition::GainFinite:
      return "gain not finite";
    case RegularityCondition::RangeInclusion:
      return "range condition violated";
  }
  return "unknown";
}

namespace {

void require_solvable(const RiccatiSolution& sol, const char* who) {
  const ClosedLoopCheck check = check_closed_loop_solvable(sol);
  if (!check.solvable) {
    const auto& v = *check.first_violation;
    throw std::invalid_argument(std::string(who) + ": not closed-loop solvable (" +
                                to_string(v.condition) + " at t=" +
                                std::to_string(v.t) + ")");
  }
}

}  // namespace

ClosedLoopPolicy closed_loop_policy(const RiccatiSolution& sol) {
  require_solvable(sol, "closed_loop_policy");
  ClosedLoopPolicy policy;
  policy.law.K = sol.Khat;
  policy.law.v.assign(sol.Khat.size(), Vec());
  for (std::size_t t = 0; t < sol.Khat.size(); ++t) {
    policy.law.v[t] = Vec::Zero(sol.Khat[t].rows());
  }
  policy.provenance = PolicyProvenance::ExactRiccati;
  policy.free_params_zeroed = true;
  return policy;
}

double value_function(const RiccatiSolution& sol, const Vec& x0) {
  require_solvable(sol, "value_function");
  if (x0.size() != sol.P[0].rows()) {
    throw std::invalid_argument("value_function: x0 has dimension " +
                                std::to_string(x0.size()) + ", expected " +
                                std::to_string(sol.P[0].rows()));
  }
  return x0.dot(sol.P[0] * x0);
}

double completion_of_squares_residual(const LqProblem& p, const RiccatiSolution& sol,
                                      const Vec& x0, const ControlSequence& u) {
  require_solvable(sol, "completion_of_squares_residual");
  const Trajectory x = simulate(p, x0, u);
  const double j = cost(p, x0, u);
  double squares = 0.0;
  for (int t = 0; t < p.N; ++t) {
    const Vec d = u[t] - sol.Khat[t] * x[t];
    squares += d.dot(sol.Rhat[t] * d);
  }
  return j - x0.dot(sol.P[0] * x0) - squares;
}

ClassicalRiccati solve_classical_riccati(const LqProblem& p) {
  ClassicalRiccati out;
  out.P.resize(p.N + 1);
  out.K.resize(p.N);
  out.P[p.N] = p.H;
  for (int t = p.N - 1; t >= 0; --t) {
    const Mat& Pn = out.P[t + 1];
    const Mat rhat = symmetrized(p.R[t] + p.B[t].transpose() * Pn * p.B[t]);
    const Mat cross = p.B[t].transpose() * Pn * p.A[t] + p.S[t];
    Eigen::FullPivLU<Mat> lu(rhat);
    if (!lu.isInvertible()) {
      throw std::runtime_error("classical riccati: singular kernel at t=" +
                               std::to_string(t));
    }
    const Mat rhat_inv = lu.inverse();
    out.K[t] = -rhat_inv * cross;
    out.P[t] = symmetrized(p.Q[t] + p.A[t].transpose() * Pn * p.A[t] -
                           cross.transpose() * rhat_inv * cross);
    if (!out.P[t].allFinite()) {
      throw std::runtime_error("classical riccati: non-finite P at step t=" +
                               std::to_string(t));
    }
  }
  return out;
}

}  // namespace lqsolve
