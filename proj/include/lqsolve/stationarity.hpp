#pragma once

// Costate (adjoint) recursion and first-order stationarity residuals.
//
// For a trajectory (x, u) the costates run backward:
//   lambda_{N-1} = H x_N
//   lambda_{t-1} = Q_t x_t + S_t' u_t + A_t' lambda_t,   t = N-1..1
// stored as lambda[0..N-1] with lambda[t] the multiplier attached to step t.
// A control is a stationary point of J(x0, .) iff for every t
//   R_t u_t + S_t x_t + B_t' lambda_t = 0.

#include <vector>

#include "lqsolve/problem.hpp"

namespace lqsolve {

// lambda[0..N-1] for the given trajectory/control pair. x must hold N+1
// states and u N controls.
std::vector<Vec> costates(const LqProblem& p, const Trajectory& x,
                          const ControlSequence& u);

// Per-step stationarity terms r_t = R_t u_t + S_t x_t + B_t' lambda_t along
// the trajectory generated by u.
std::vector<Vec> equilibrium_residual_terms(const LqProblem& p, const Vec& x0,
                                            const ControlSequence& u);

// max_t || r_t ||_max. Zero exactly at stationary controls; for quadratic
// J with PSD stacked Hessian, stationary means globally optimal.
double equilibrium_residual(const LqProblem& p, const Vec& x0,
                            const ControlSequence& u);

// Residual of the closed-loop stationarity system under a full-window law:
// rolls x_{t+1} = (A_t + B_t K_t) x_t + B_t v_t, closes the costates with
//   lambda_{t-1} = (Q_t + S_t'K_t) x_t + S_t' v_t + A_t' lambda_t,
// and returns max_t || (R_t K_t + S_t) x_t + R_t v_t + B_t' lambda_t ||_max.
double feedback_fbde_check(const LqProblem& p, const Vec& x0,
                           const FeedbackLaw& law);

}  // namespace lqsolve
