#include "lqsolve/perturbation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "lqsolve/stationarity.hpp"

namespace lqsolve {

EpsilonSchedule EpsilonSchedule::geometric(double eps0, double ratio, int steps) {
  if (!(eps0 > 0.0) || !std::isfinite(eps0)) {
    throw std::invalid_argument("EpsilonSchedule: eps0 must be positive and finite");
  }
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("EpsilonSchedule: ratio must lie in (0, 1)");
  }
  if (steps < 3) {
    throw std::invalid_argument("EpsilonSchedule: need at least 3 points, got " +
                                std::to_string(steps));
  }
  EpsilonSchedule s;
  s.values.resize(steps);
  double e = eps0;
  for (int i = 0; i < steps; ++i, e *= ratio) s.values[i] = e;
  s.validate();
  return s;
}

void EpsilonSchedule::validate() const {
  if (values.size() < 3) {
    throw std::invalid_argument("EpsilonSchedule: need at least 3 points, got " +
                                std::to_string(values.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) {
      throw std::invalid_argument("EpsilonSchedule: entry " + std::to_string(i) +
                                  " is not positive and finite");
    }
    if (i > 0 && !(values[i] < values[i - 1])) {
      throw std::invalid_argument("EpsilonSchedule: not strictly decreasing at entry " +
                                  std::to_string(i));
    }
  }
}

namespace {

struct StepSolve {
  Mat K;
  Mat cross;
  KernelFlags flags;
};

// One backward step of the perturbed recursion: eigendecompose the shifted
// kernel R_t + B'P_{t+1}B + eps I; invert it on the eigenbasis, zeroing
// modes below the rank cutoff (that substitution is the pseudoinverse
// fallback and is flagged rather than fatal).
StepSolve perturbed_step(const LqProblem& p, int t, const Mat& Pn, double eps) {
  const Mat PnB = Pn * p.B[t];
  const Mat rhat = symmetrized(p.R[t] + p.B[t].transpose() * PnB);

  StepSolve s;
  s.cross = PnB.transpose() * p.A[t] + p.S[t];

  Eigen::SelfAdjointEigenSolver<Mat> eig(rhat);
  if (eig.info() != Eigen::Success) {
    throw std::runtime_error("perturbed riccati: eigendecomposition failed at t=" +
                             std::to_string(t));
  }
  const Vec& d = eig.eigenvalues();
  s.flags.regularity_ok =
      d.minCoeff() >= eps - tol::kPsd * (1.0 + max_norm(rhat));

  Vec shifted = d.array() + eps;
  const double cutoff = tol::kRank * shifted.cwiseAbs().maxCoeff();
  Vec w = Vec::Zero(shifted.size());
  for (Eigen::Index i = 0; i < shifted.size(); ++i) {
    if (std::abs(shifted(i)) > cutoff) {
      w(i) = 1.0 / shifted(i);
    } else {
      s.flags.invertible = false;
    }
  }
  const Mat kernel_inv =
      eig.eigenvectors() * w.asDiagonal() * eig.eigenvectors().transpose();
  s.K = -(kernel_inv * s.cross);
  return s;
}

void require_positive_epsilon(double epsilon, const char* who) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument(std::string(who) +
                                ": epsilon must be positive and finite, got " +
                                std::to_string(epsilon));
  }
}

}  // namespace

EpsilonRiccati epsilon_riccati(const LqProblem& p, double epsilon) {
  require_positive_epsilon(epsilon, "epsilon_riccati");
  EpsilonRiccati er;
  er.epsilon = epsilon;
  er.P.resize(p.N + 1);
  er.flags.resize(p.N);
  er.P[p.N] = p.H;
  for (int t = p.N - 1; t >= 0; --t) {
    const StepSolve s = perturbed_step(p, t, er.P[t + 1], epsilon);
    // cross' K == -cross' (kernel)^{-1} cross, the Riccati correction term.
    er.P[t] = symmetrized(p.Q[t] + p.A[t].transpose() * er.P[t + 1] * p.A[t] +
                          s.cross.transpose() * s.K);
    if (!er.P[t].allFinite()) {
      throw std::runtime_error("epsilon_riccati: non-finite P at step t=" +
                               std::to_string(t) + " (epsilon=" +
                               std::to_string(epsilon) + ")");
    }
    er.flags[t] = s.flags;
  }
  return er;
}

std::vector<Mat> epsilon_gain(const LqProblem& p, const EpsilonRiccati& er) {
  require_positive_epsilon(er.epsilon, "epsilon_gain");
  if (er.P.size() != static_cast<std::size_t>(p.N) + 1) {
    throw std::invalid_argument("epsilon_gain: P sequence has " +
                                std::to_string(er.P.size()) + " entries, expected " +
                                std::to_string(p.N + 1));
  }
  std::vector<Mat> K(p.N);
  for (int t = 0; t < p.N; ++t) {
    K[t] = perturbed_step(p, t, er.P[t + 1], er.epsilon).K;
  }
  return K;
}

PerturbationSweep run_sweep(const LqProblem& p, const Vec& x0,
                            const EpsilonSchedule& schedule, int threads) {
  schedule.validate();
  if (x0.size() != p.n) {
    throw std::invalid_argument("run_sweep: x0 has dimension " +
                                std::to_string(x0.size()) + ", expected n=" +
                                std::to_string(p.n));
  }
  if (threads < 1) {
    throw std::invalid_argument("run_sweep: threads must be >= 1");
  }

  PerturbationSweep sweep;
  sweep.schedule = schedule;
  sweep.x0 = x0;
  const int count = static_cast<int>(schedule.values.size());
  sweep.entries.resize(count);

  auto compute_entry = [&](int i) {
    const double eps = schedule.values[i];
    SweepEntry e;
    e.epsilon = eps;
    EpsilonRiccati er = epsilon_riccati(p, eps);
    e.K = epsilon_gain(p, er);
    e.flags = std::move(er.flags);
    e.P = std::move(er.P);

    e.x.resize(p.N + 1);
    e.u.resize(p.N);
    e.x[0] = x0;
    for (int t = 0; t < p.N; ++t) {
      e.u[t] = e.K[t] * e.x[t];
      e.x[t + 1] = (p.A[t] + p.B[t] * e.K[t]) * e.x[t];
    }
    e.control_energy = 0.0;
    for (const Vec& ut : e.u) e.control_energy += ut.squaredNorm();
    e.value = x0.dot(e.P[0] * x0);
    sweep.entries[i] = std::move(e);
  };

  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) compute_entry(i);
  } else {
    // Entries are independent; each worker writes only its own slot, so the
    // assembled sweep does not depend on the thread count.
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          compute_entry(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    };
    const int pool_size = std::min(threads, count);
    std::vector<std::thread> pool;
    pool.reserve(pool_size);
    for (int k = 0; k < pool_size; ++k) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  SweepDiagnostics& diag = sweep.diagnostics;
  diag.sup_control_energy = 0.0;
  for (const SweepEntry& e : sweep.entries) {
    diag.sup_control_energy = std::max(diag.sup_control_energy, e.control_energy);
  }
  const int window = p.N - 1;  // gains are compared on t = 0..N-2 only
  diag.control_gaps.resize(count - 1);
  diag.gain_window_gaps.resize(count - 1);
  for (int k = 0; k + 1 < count; ++k) {
    double ugap = 0.0;
    for (int t = 0; t < p.N; ++t) {
      ugap += (sweep.entries[k].u[t] - sweep.entries[k + 1].u[t]).squaredNorm();
    }
    diag.control_gaps[k] = ugap;
    double kgap = 0.0;
    for (int t = 0; t < window; ++t) {
      kgap += (sweep.entries[k].K[t] - sweep.entries[k + 1].K[t]).squaredNorm();
    }
    diag.gain_window_gaps[k] = kgap;
  }
  return sweep;
}

const char* to_string(SweepVerdict v) {
  switch (v) {
    case SweepVerdict::OpenLoopSolvable:
      return "open_loop_solvable";
    case SweepVerdict::NotOpenLoopSolvable:
      return "not_open_loop_solvable";
    case SweepVerdict::Inconclusive:
      return "inconclusive";
  }
  return "unknown";
}

namespace {

// Non-increasing over the last (up to three) gap entries.
bool gaps_settling(const std::vector<double>& gaps) {
  const std::size_t len = gaps.size();
  if (len < 2) return true;
  if (!(gaps[len - 1] <= gaps[len - 2])) return false;
  if (len >= 3 && !(gaps[len - 2] <= gaps[len - 3])) return false;
  return true;
}

}  // namespace

WeakGains extract_weak_gains(const PerturbationSweep& sweep) {
  if (sweep.entries.size() < 3) {
    throw std::invalid_argument("extract_weak_gains: need at least 3 sweep entries");
  }
  const SweepEntry& last = sweep.entries.back();
  const int window = static_cast<int>(last.K.size()) - 1;

  WeakGains wg;
  wg.law.K.assign(last.K.begin(), last.K.begin() + window);
  wg.law.v.assign(window, Vec());
  for (int t = 0; t < window; ++t) wg.law.v[t] = Vec::Zero(last.K[t].rows());

  double scale = 1.0;
  for (int t = 0; t < window; ++t) scale += last.K[t].squaredNorm();
  const std::vector<double>& gaps = sweep.diagnostics.gain_window_gaps;
  wg.last_window_gap = gaps.empty() ? 0.0 : gaps.back();
  wg.window_converged = gaps_settling(gaps) &&
                        wg.last_window_gap <= sweep_defaults::kCauchyTol * scale;

  // Terminal gain: doubling max-norm across each of the last three points.
  const std::size_t count = sweep.entries.size();
  const double a = max_norm(sweep.entries[count - 3].K.back());
  const double b = max_norm(sweep.entries[count - 2].K.back());
  const double c = max_norm(sweep.entries[count - 1].K.back());
  wg.tail_gain_diverged = c > 0.0 && b >= 2.0 * a && c >= 2.0 * b;
  return wg;
}

OpenLoopClassification classify_open_loop(const LqProblem& p,
                                          const PerturbationSweep& sweep) {
  if (sweep.entries.size() < 3) {
    throw std::invalid_argument("classify_open_loop: need at least 3 sweep entries");
  }
  OpenLoopClassification cls;
  cls.gains = extract_weak_gains(sweep);

  for (const SweepEntry& e : sweep.entries) {
    if (!std::isfinite(e.control_energy) ||
        e.control_energy > sweep_defaults::kDivergenceGuard) {
      cls.control_energy_diverged = true;
    }
    if (!std::isfinite(e.value) || e.value < -sweep_defaults::kDivergenceGuard) {
      cls.value_diverged = true;
    }
  }

  const std::vector<double>& gaps = sweep.diagnostics.control_gaps;
  cls.last_control_gap = gaps.empty() ? 0.0 : gaps.back();
  const double scale = 1.0 + sweep.entries.back().control_energy;
  cls.controls_cauchy = gaps_settling(gaps) &&
                        cls.last_control_gap <= sweep_defaults::kCauchyTol * scale;

  if (cls.control_energy_diverged || cls.value_diverged) {
    cls.verdict = SweepVerdict::NotOpenLoopSolvable;
    return cls;
  }
  if (!cls.controls_cauchy) {
    cls.verdict = SweepVerdict::Inconclusive;
    return cls;
  }
  // Candidate limit control: the last (smallest-epsilon) entry. Certify it
  // as a stationary point before claiming solvability.
  const ControlSequence& candidate = sweep.entries.back().u;
  const double residual = equilibrium_residual(p, sweep.x0, candidate);
  cls.certificate_residual = residual;
  if (residual <= sweep_defaults::kCertTol) {
    cls.verdict = SweepVerdict::OpenLoopSolvable;
    cls.u_star = candidate;
  } else {
    cls.verdict = SweepVerdict::Inconclusive;
  }
  return cls;
}

FeedbackRollout apply_weak_law(const LqProblem& p, const Vec& x0,
                               const OpenLoopClassification& cls) {
  if (cls.verdict != SweepVerdict::OpenLoopSolvable || !cls.u_star) {
    throw std::invalid_argument(
        "apply_weak_law: classification verdict is not open_loop_solvable");
  }
  if (x0.size() != p.n) {
    throw std::invalid_argument("apply_weak_law: x0 has dimension " +
                                std::to_string(x0.size()) + ", expected n=" +
                                std::to_string(p.n));
  }
  const auto window = cls.gains.law.window();
  FeedbackRollout r;
  r.x.resize(p.N + 1);
  r.u.resize(p.N);
  r.x[0] = x0;
  for (int t = 0; t < p.N; ++t) {
    if (static_cast<std::size_t>(t) < window) {
      // Same arithmetic as the sweep rollout, so the realized control
      // reproduces u_star on the window.
      r.u[t] = cls.gains.law.K[t] * r.x[t];
      r.x[t + 1] = (p.A[t] + p.B[t] * cls.gains.law.K[t]) * r.x[t];
    } else {
      r.u[t] = (*cls.u_star)[t];
      r.x[t + 1] = p.A[t] * r.x[t] + p.B[t] * r.u[t];
    }
  }
  return r;
}

ValueConvergenceReport value_convergence_report(
    const PerturbationSweep& sweep, std::optional<double> reference_value) {
  ValueConvergenceReport rep;
  rep.rows.reserve(sweep.entries.size());
  for (const SweepEntry& e : sweep.entries) {
    ValueRow row;
    row.epsilon = e.epsilon;
    row.value = e.value;
    if (reference_value) {
      row.gap = e.value - *reference_value;
      if (!(e.value >= *reference_value - 1e-8)) rep.sandwich_ok = false;
    }
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace lqsolve
