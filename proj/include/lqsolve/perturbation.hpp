#pragma once

// Epsilon-perturbation route to open-loop solvability. For epsilon > 0 the
// control weight is stiffened to R_t + epsilon I and the perturbed Riccati
// recursion
//   P^e_N = H
//   P^e_t = Q_t + A_t'P^e_{t+1}A_t
//           - (A_t'P^e_{t+1}B_t + S_t')(R_t + B_t'P^e_{t+1}B_t + eps I)^{-1}
//             (B_t'P^e_{t+1}A_t + S_t)
// always runs, with gains K^e_t = -(R_t + B_t'P^e_{t+1}B_t + eps I)^{-1}
// (B_t'P^e_{t+1}A_t + S_t) and the closed rollout x^e_{t+1} =
// (A_t + B_t K^e_t) x^e_t, u^e_t = K^e_t x^e_t.
//
// Driving epsilon -> 0 along a decreasing schedule and watching the controls
// u^e decides open-loop solvability for the given x0: a bounded, Cauchy
// family whose limit satisfies the stationarity system certifies a
// minimizing control; blow-up of the control energy or of the values V_e is
// evidence against solvability. Gains converge on the truncated window
// t = 0..N-2 ("weak" closed-loop gains); the terminal gain may diverge even
// when the controls converge, which is reported, not treated as failure.
//
// Two per-step conditions are recorded but deliberately do not stop the
// computation: invertibility of the shifted kernel (a pseudoinverse is
// substituted when it is numerically singular) and the regularity bound
// R_t + B_t'P^e_{t+1}B_t >= eps I.

#include <optional>
#include <vector>

#include "lqsolve/problem.hpp"

namespace lqsolve {

namespace sweep_defaults {
inline constexpr double kEps0 = 1.0;
inline constexpr double kRatio = 0.5;
inline constexpr int kSteps = 40;
// Cauchy acceptance for squared control gaps, scaled by (1 + sum |u|^2).
inline constexpr double kCauchyTol = 1e-8;
// Stationarity-residual bound for certifying a candidate limit control.
inline constexpr double kCertTol = 1e-6;
// Control-energy / value blow-up guard.
inline constexpr double kDivergenceGuard = 1e12;
}  // namespace sweep_defaults

struct EpsilonSchedule {
  std::vector<double> values;  // strictly decreasing, positive, length >= 3

  static EpsilonSchedule geometric(double eps0 = sweep_defaults::kEps0,
                                   double ratio = sweep_defaults::kRatio,
                                   int steps = sweep_defaults::kSteps);
  void validate() const;  // throws std::invalid_argument on violation
};

struct KernelFlags {
  // False when the shifted kernel R_t + B'P^e_{t+1}B + eps I was numerically
  // singular and a pseudoinverse was substituted.
  bool invertible = true;
  // Regularity bound R_t + B'P^e_{t+1}B >= eps I (min eigenvalue test).
  bool regularity_ok = true;
};

struct EpsilonRiccati {
  double epsilon = 0.0;
  std::vector<Mat> P;             // N+1
  std::vector<KernelFlags> flags;  // N
};

// Backward pass at a single epsilon > 0. Throws std::invalid_argument for
// epsilon <= 0 and std::runtime_error on non-finite intermediates.
EpsilonRiccati epsilon_riccati(const LqProblem& p, double epsilon);

// Gains recomputed from a finished backward pass; bit-identical to the ones
// used inside epsilon_riccati because both go through the same kernel solve.
std::vector<Mat> epsilon_gain(const LqProblem& p, const EpsilonRiccati& er);

struct SweepEntry {
  double epsilon = 0.0;
  std::vector<Mat> P;
  std::vector<Mat> K;
  std::vector<KernelFlags> flags;
  Trajectory x;
  ControlSequence u;
  double control_energy = 0.0;  // sum_t |u_t|^2
  double value = 0.0;           // x0' P^e_0 x0
};

struct SweepDiagnostics {
  double sup_control_energy = 0.0;
  // Consecutive squared control gaps sum_t |u^{e_k}_t - u^{e_{k+1}}_t|^2.
  std::vector<double> control_gaps;
  // Same for gains on the truncated window, Frobenius-squared.
  std::vector<double> gain_window_gaps;
};

struct PerturbationSweep {
  EpsilonSchedule schedule;
  Vec x0;
  std::vector<SweepEntry> entries;  // schedule order
  SweepDiagnostics diagnostics;
};

// Runs the whole schedule. Entries are independent; `threads` > 1 computes
// them concurrently and the result is assembled in schedule order, so output
// is identical for any thread count.
PerturbationSweep run_sweep(const LqProblem& p, const Vec& x0,
                            const EpsilonSchedule& schedule, int threads = 1);

enum class SweepVerdict { OpenLoopSolvable, NotOpenLoopSolvable, Inconclusive };

const char* to_string(SweepVerdict v);

struct WeakGains {
  FeedbackLaw law;  // window t = 0..N-2 (empty for N = 1)
  bool window_converged = false;
  double last_window_gap = 0.0;
  // Max-norm of the terminal gain grew by a factor >= 2 across each of the
  // last three schedule points.
  bool tail_gain_diverged = false;
};

WeakGains extract_weak_gains(const PerturbationSweep& sweep);

struct OpenLoopClassification {
  SweepVerdict verdict = SweepVerdict::Inconclusive;
  std::optional<ControlSequence> u_star;  // last sweep control when certified
  WeakGains gains;
  // Evidence.
  bool control_energy_diverged = false;
  bool value_diverged = false;
  bool controls_cauchy = false;
  double last_control_gap = 0.0;
  std::optional<double> certificate_residual;  // stationarity residual of u_star
};

// Decision rule:
//   - control energy above the guard, or values below -guard  -> NotOpenLoopSolvable
//   - controls Cauchy (last gaps shrinking under kCauchyTol) and the limit
//     candidate passes the stationarity certificate (kCertTol)  -> OpenLoopSolvable
//   - otherwise -> Inconclusive
// A positive verdict always carries u_star and its certificate residual.
OpenLoopClassification classify_open_loop(const LqProblem& p,
                                          const PerturbationSweep& sweep);

// Feedback rollout of a certified classification: gains on the truncated
// window, stored u_star entries for the tail step(s). Requires verdict
// OpenLoopSolvable.
FeedbackRollout apply_weak_law(const LqProblem& p, const Vec& x0,
                               const OpenLoopClassification& cls);

struct ValueRow {
  double epsilon = 0.0;
  double value = 0.0;
  std::optional<double> gap;  // value - reference, when a reference is given
};

struct ValueConvergenceReport {
  std::vector<ValueRow> rows;
  // With a reference value V: every row satisfies value >= V - 1e-8.
  bool sandwich_ok = true;
};

ValueConvergenceReport value_convergence_report(
    const PerturbationSweep& sweep, std::optional<double> reference_value);

}  // namespace lqsolve
