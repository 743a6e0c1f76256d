#include "lqsolve/stationarity.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace lqsolve {

std::vector<Vec> costates(const LqProblem& p, const Trajectory& x,
                          const ControlSequence& u) {
  if (x.size() != static_cast<std::size_t>(p.N) + 1) {
    throw std::invalid_argument("costates: trajectory has " +
                                std::to_string(x.size()) + " states, expected " +
                                std::to_string(p.N + 1));
  }
  if (u.size() != static_cast<std::size_t>(p.N)) {
    throw std::invalid_argument("costates: control has " + std::to_string(u.size()) +
                                " entries, expected " + std::to_string(p.N));
  }
  std::vector<Vec> lambda(p.N);
  lambda[p.N - 1] = p.H * x[p.N];
  for (int t = p.N - 1; t >= 1; --t) {
    lambda[t - 1] = p.Q[t] * x[t] + p.S[t].transpose() * u[t] +
                    p.A[t].transpose() * lambda[t];
  }
  return lambda;
}

std::vector<Vec> equilibrium_residual_terms(const LqProblem& p, const Vec& x0,
                                            const ControlSequence& u) {
  const Trajectory x = simulate(p, x0, u);
  const std::vector<Vec> lambda = costates(p, x, u);
  std::vector<Vec> r(p.N);
  for (int t = 0; t < p.N; ++t) {
    r[t] = p.R[t] * u[t] + p.S[t] * x[t] + p.B[t].transpose() * lambda[t];
  }
  return r;
}

double equilibrium_residual(const LqProblem& p, const Vec& x0,
                            const ControlSequence& u) {
  double worst = 0.0;
  for (const Vec& r : equilibrium_residual_terms(p, x0, u)) {
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

double feedback_fbde_check(const LqProblem& p, const Vec& x0,
                           const FeedbackLaw& law) {
  if (law.window() != static_cast<std::size_t>(p.N)) {
    throw std::invalid_argument("feedback_fbde_check: law covers " +
                                std::to_string(law.window()) +
                                " steps, expected the full horizon " +
                                std::to_string(p.N));
  }
  Trajectory x(p.N + 1);
  x[0] = x0;
  for (int t = 0; t < p.N; ++t) {
    x[t + 1] = (p.A[t] + p.B[t] * law.K[t]) * x[t] + p.B[t] * law.v[t];
  }
  std::vector<Vec> lambda(p.N);
  lambda[p.N - 1] = p.H * x[p.N];
  for (int t = p.N - 1; t >= 1; --t) {
    lambda[t - 1] = (p.Q[t] + p.S[t].transpose() * law.K[t]) * x[t] +
                    p.S[t].transpose() * law.v[t] + p.A[t].transpose() * lambda[t];
  }
  double worst = 0.0;
  for (int t = 0; t < p.N; ++t) {
    const Vec r = (p.R[t] * law.K[t] + p.S[t]) * x[t] + p.R[t] * law.v[t] +
                  p.B[t].transpose() * lambda[t];
    worst = std::max(worst, r.cwiseAbs().maxCoeff());
  }
  return worst;
}

}  // namespace lqsolve
