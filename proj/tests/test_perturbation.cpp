#include "doctest.h"

#include <cmath>
#include <random>
#include <stdexcept>

#include "lqsolve/perturbation.hpp"
#include "lqsolve/qp_oracle.hpp"
#include "lqsolve/riccati.hpp"
#include "lqsolve/stationarity.hpp"
#include "test_support.hpp"

using namespace lqsolve;

namespace {

// Closed forms for the indefinite scalar example at epsilon > 0:
//   P^e_t = (e - 1) / (e + 1 - t),  K^e_t = -1 / (e + 1 - t),  t = 0, 1.
double p_closed(double eps, int t) { return (eps - 1.0) / (eps + 1.0 - t); }
double k_closed(double eps, int t) { return -1.0 / (eps + 1.0 - t); }

}  // namespace

TEST_CASE("perturbed recursion matches the scalar closed forms") {
  const LqProblem p = testsup::scalar_indefinite();
  for (const double eps : {2.0, 0.5, 0.25, 0.125, 1.0 / 1024.0}) {
    const EpsilonRiccati er = epsilon_riccati(p, eps);
    CHECK(er.P[2](0, 0) == 1.0);
    for (int t = 0; t < 2; ++t) {
      CHECK(er.P[t](0, 0) ==
            doctest::Approx(p_closed(eps, t)).epsilon(1e-13));
      CHECK(er.flags[t].invertible);
      // R + B'P^e B < eps at every step: this example is never regular.
      CHECK_FALSE(er.flags[t].regularity_ok);
    }
    const std::vector<Mat> K = epsilon_gain(p, er);
    for (int t = 0; t < 2; ++t) {
      CHECK(K[t](0, 0) == doctest::Approx(k_closed(eps, t)).epsilon(1e-13));
    }
  }
}

TEST_CASE("exactly singular shifted kernel: flagged, pseudoinverse fallback") {
  // At eps = 1 the kernel at t = 0 is -1 + 0 + 1 = 0. The recursion flags it,
  // substitutes the pseudoinverse (gain 0) and continues. The resulting
  // control (0, -1) is still optimal for the eps-penalized cost: both give
  // J_eps = x0' P^1_0 x0 = 0.
  const LqProblem p = testsup::scalar_indefinite();
  const EpsilonRiccati er = epsilon_riccati(p, 1.0);
  CHECK_FALSE(er.flags[0].invertible);
  CHECK(er.flags[1].invertible);
  CHECK(er.P[0](0, 0) == 0.0);
  CHECK(er.P[1](0, 0) == 0.0);

  const std::vector<Mat> K = epsilon_gain(p, er);
  CHECK(K[0](0, 0) == 0.0);
  CHECK(K[1](0, 0) == -1.0);

  Vec x0(1);
  x0 << 1.0;
  ControlSequence u{Vec::Zero(1), Vec::Constant(1, -1.0)};
  const double j_eps = cost(p, x0, u) + 1.0 * (u[0].squaredNorm() + u[1].squaredNorm());
  CHECK(j_eps == doctest::Approx(0.0));
}

TEST_CASE("epsilon_riccati validates epsilon") {
  const LqProblem p = testsup::scalar_convex();
  CHECK_THROWS_AS(epsilon_riccati(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(epsilon_riccati(p, -0.5), std::invalid_argument);
}

TEST_CASE("perturbed recursion equals the exact recursion on stiffened weights") {
  // Adding eps to R by hand and running the unperturbed solver must agree
  // with the built-in shift whenever the kernels are invertible.
  std::mt19937 rng(71);
  const double eps = 0.3;
  for (int trial = 0; trial < 30; ++trial) {
    const LqProblem p = testsup::random_convex_problem(rng);
    std::vector<Mat> R_shift = p.R;
    for (Mat& r : R_shift) r += eps * Mat::Identity(p.m, p.m);
    const LqProblem shifted(p.N, p.A, p.B, p.Q, p.S, R_shift, p.H);

    const EpsilonRiccati er = epsilon_riccati(p, eps);
    const RiccatiSolution exact = solve_generalized_riccati(shifted);
    for (int t = 0; t <= p.N; ++t) {
      CHECK(max_norm(er.P[t] - exact.P[t]) <
            1e-12 * (1.0 + max_norm(exact.P[t])));
    }
  }
}

TEST_CASE("schedule construction and validation") {
  const EpsilonSchedule s = EpsilonSchedule::geometric();
  REQUIRE(s.values.size() == 40);
  CHECK(s.values.front() == 1.0);
  CHECK(s.values[1] == 0.5);
  for (std::size_t i = 1; i < s.values.size(); ++i) {
    CHECK(s.values[i] < s.values[i - 1]);
    CHECK(s.values[i] > 0.0);
  }
  CHECK_NOTHROW(s.validate());

  CHECK_THROWS_AS(EpsilonSchedule::geometric(-1.0, 0.5, 40), std::invalid_argument);
  CHECK_THROWS_AS(EpsilonSchedule::geometric(1.0, 1.5, 40), std::invalid_argument);
  CHECK_THROWS_AS(EpsilonSchedule::geometric(1.0, 0.5, 2), std::invalid_argument);

  EpsilonSchedule bad;
  bad.values = {0.5, 0.5, 0.25};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("indefinite scalar example is certified open-loop solvable") {
  const LqProblem p = testsup::scalar_indefinite();
  Vec x0(1);
  x0 << 1.0;
  const PerturbationSweep sweep = run_sweep(p, x0, EpsilonSchedule::geometric());
  const OpenLoopClassification cls = classify_open_loop(p, sweep);

  CHECK(cls.verdict == SweepVerdict::OpenLoopSolvable);
  CHECK(cls.controls_cauchy);
  CHECK_FALSE(cls.control_energy_diverged);
  CHECK_FALSE(cls.value_diverged);
  REQUIRE(cls.u_star.has_value());
  REQUIRE(cls.certificate_residual.has_value());
  CHECK(*cls.certificate_residual <= sweep_defaults::kCertTol);

  // The controls approach the minimal-energy stationary pair (-x0, -x0);
  // the last schedule point sits about 2^-39 away from the limit.
  CHECK(std::abs((*cls.u_star)[0](0) + 1.0) < 1e-11);
  CHECK(std::abs((*cls.u_star)[1](0) + 1.0) < 1e-11);
  for (int t = 0; t < 2; ++t) {
    CHECK((*cls.u_star)[t] == sweep.entries.back().u[t]);
  }

  // Gains converge on the truncated window while the terminal gain blows up
  // like -1/eps; that is reported but does not block certification.
  REQUIRE(cls.gains.law.window() == 1);
  CHECK(std::abs(cls.gains.law.K[0](0, 0) + 1.0) < 1e-11);
  CHECK(cls.gains.window_converged);
  CHECK(cls.gains.tail_gain_diverged);

  // Values fall toward the stationary value -x0^2 from above.
  const ValueConvergenceReport rep = value_convergence_report(sweep, -1.0);
  CHECK(rep.sandwich_ok);
  REQUIRE(rep.rows.size() == sweep.entries.size());
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].value <= rep.rows[i - 1].value + 1e-15);
  }
}

TEST_CASE("convex scalar example: sweep converges to the true minimizer") {
  const LqProblem p = testsup::scalar_convex();
  Vec x0(1);
  x0 << 1.0;
  const PerturbationSweep sweep = run_sweep(p, x0, EpsilonSchedule::geometric());
  const OpenLoopClassification cls = classify_open_loop(p, sweep);

  REQUIRE(cls.verdict == SweepVerdict::OpenLoopSolvable);
  CHECK(std::abs((*cls.u_star)[0](0) + 0.6) < 1e-9);
  CHECK(std::abs((*cls.u_star)[1](0) + 0.2) < 1e-9);
  CHECK_FALSE(cls.gains.tail_gain_diverged);
  CHECK(cls.gains.window_converged);

  // V_eps decreases to V = 1.6 and respects the control-energy upper bound
  // V_eps <= V + eps * |u_opt|^2 with |u_opt|^2 = 0.4.
  const ValueConvergenceReport rep = value_convergence_report(sweep, 1.6);
  CHECK(rep.sandwich_ok);
  for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
    const double eps = sweep.schedule.values[i];
    CHECK(sweep.entries[i].value >= 1.6 - 1e-8);
    CHECK(sweep.entries[i].value <= 1.6 + eps * 0.4 + 1e-8);
  }
}

TEST_CASE("diverging control energy yields a negative verdict") {
  std::mt19937 rng(72);
  for (int trial = 0; trial < 5; ++trial) {
    const LqProblem p = testsup::divergent_indefinite_problem(rng);
    Vec x0(2);
    x0 << 1.0, -0.5;
    const PerturbationSweep sweep = run_sweep(p, x0, EpsilonSchedule::geometric());
    const OpenLoopClassification cls = classify_open_loop(p, sweep);
    CHECK(cls.verdict == SweepVerdict::NotOpenLoopSolvable);
    CHECK(cls.control_energy_diverged);
    CHECK_FALSE(cls.u_star.has_value());
    CHECK_THROWS_AS(apply_weak_law(p, x0, cls), std::invalid_argument);
  }
}

TEST_CASE("sweep output does not depend on the thread count") {
  std::mt19937 rng(73);
  const LqProblem p = testsup::random_indefinite_problem(rng);
  const Vec x0 = testsup::random_vector(rng, p.n);
  const EpsilonSchedule sched = EpsilonSchedule::geometric(1.0, 0.5, 12);

  const PerturbationSweep a = run_sweep(p, x0, sched, 1);
  const PerturbationSweep b = run_sweep(p, x0, sched, 4);
  REQUIRE(a.entries.size() == b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].value == b.entries[i].value);
    CHECK(a.entries[i].control_energy == b.entries[i].control_energy);
    for (int t = 0; t < p.N; ++t) {
      CHECK(a.entries[i].K[t] == b.entries[i].K[t]);
      CHECK(a.entries[i].u[t] == b.entries[i].u[t]);
    }
  }
  CHECK_THROWS_AS(run_sweep(p, x0, sched, 0), std::invalid_argument);
}

TEST_CASE("zero initial state certifies the zero control") {
  const LqProblem p = testsup::scalar_indefinite();
  const PerturbationSweep sweep =
      run_sweep(p, Vec::Zero(1), EpsilonSchedule::geometric());
  const OpenLoopClassification cls = classify_open_loop(p, sweep);
  REQUIRE(cls.verdict == SweepVerdict::OpenLoopSolvable);
  CHECK((*cls.u_star)[0](0) == 0.0);
  CHECK((*cls.u_star)[1](0) == 0.0);
  CHECK(*cls.certificate_residual == 0.0);
}

TEST_CASE("weak-law rollout reproduces the certified control") {
  const LqProblem p = testsup::scalar_indefinite();
  Vec x0(1);
  x0 << 1.0;
  const PerturbationSweep sweep = run_sweep(p, x0, EpsilonSchedule::geometric());
  const OpenLoopClassification cls = classify_open_loop(p, sweep);
  REQUIRE(cls.verdict == SweepVerdict::OpenLoopSolvable);

  const FeedbackRollout roll = apply_weak_law(p, x0, cls);
  REQUIRE(roll.u.size() == 2);
  CHECK(roll.u[0] == (*cls.u_star)[0]);
  CHECK(roll.u[1] == (*cls.u_star)[1]);
  CHECK(roll.x[0] == x0);
}

TEST_CASE("horizon one: empty gain window, certification still works") {
  // min u^2 + (x0 + u)^2 has the unique minimizer u = -x0/2.
  const Mat one = Mat::Constant(1, 1, 1.0);
  const Mat zero = Mat::Zero(1, 1);
  const LqProblem p = LqProblem::constant(1, one, one, zero, zero, one, one);
  Vec x0(1);
  x0 << 2.0;
  const PerturbationSweep sweep = run_sweep(p, x0, EpsilonSchedule::geometric());
  const OpenLoopClassification cls = classify_open_loop(p, sweep);
  REQUIRE(cls.verdict == SweepVerdict::OpenLoopSolvable);
  CHECK(cls.gains.law.window() == 0);
  CHECK(std::abs((*cls.u_star)[0](0) + 1.0) < 1e-9);
  const FeedbackRollout roll = apply_weak_law(p, x0, cls);
  CHECK(roll.u[0] == (*cls.u_star)[0]);
}

TEST_CASE("short geometric schedules leave the verdict inconclusive") {
  // Six points reach eps ~ 0.03: controls are still drifting at the third
  // decimal, which must not be certified.
  const LqProblem p = testsup::scalar_indefinite();
  Vec x0(1);
  x0 << 1.0;
  const PerturbationSweep sweep =
      run_sweep(p, x0, EpsilonSchedule::geometric(1.0, 0.5, 6));
  const OpenLoopClassification cls = classify_open_loop(p, sweep);
  CHECK(cls.verdict == SweepVerdict::Inconclusive);
  CHECK_FALSE(cls.u_star.has_value());
}
