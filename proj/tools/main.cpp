// Command-line front end: loads a problem JSON file and runs the solvability
// analyses, emitting machine-readable reports with deterministic bytes (key
// order, float formatting and row order are all fixed; run metadata appears
// only behind --verbose).
//
// Commands
//   classify  closed-loop test, stacked-QP oracle and epsilon sweep side by
//             side, with an agreement section listing any discrepancies
//   solve     best available control: exact closed-loop law, else certified
//             weak closed-loop law, else verdicts only
//   sweep     epsilon sweep as CSV (--out, default sweep.csv) plus a JSON
//             summary on stdout
//   oracle    stacked quadratic analysis for the supplied x0
//
// Exit codes: 0 completed (whatever the verdict), 2 input error, 3 internal
// numerical failure.

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "lqsolve/io.hpp"
#include "lqsolve/perturbation.hpp"
#include "lqsolve/problem.hpp"
#include "lqsolve/qp_oracle.hpp"
#include "lqsolve/riccati.hpp"
#include "lqsolve/stationarity.hpp"

namespace {

using nlohmann::json;
using namespace lqsolve;

struct Options {
  std::string problem_path;
  std::string x0_csv;
  std::string out_path;
  bool echo = false;
  bool verbose = false;
  int threads = 1;
  double eps0 = sweep_defaults::kEps0;
  double ratio = sweep_defaults::kRatio;
  int steps = sweep_defaults::kSteps;
};

Vec parse_x0(const std::string& csv, int n) {
  if (csv.empty()) {
    throw std::invalid_argument("--x0 is required (n=" + std::to_string(n) +
                                " comma-separated entries)");
  }
  std::vector<double> vals;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size() || !std::isfinite(v)) throw std::invalid_argument(item);
      vals.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("--x0: cannot parse entry \"" + item + "\"");
    }
  }
  if (vals.size() != static_cast<std::size_t>(n)) {
    throw std::invalid_argument("--x0 has " + std::to_string(vals.size()) +
                                " entries, expected n=" + std::to_string(n));
  }
  Vec x0(n);
  for (int i = 0; i < n; ++i) x0(i) = vals[i];
  return x0;
}

json vec_to_json(const Vec& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json mat_seq_to_json(const std::vector<Mat>& seq) {
  json arr = json::array();
  for (const Mat& m : seq) arr.push_back(mat_to_json(m));
  return arr;
}

json controls_to_json(const ControlSequence& u) {
  json arr = json::array();
  for (const Vec& ut : u) arr.push_back(vec_to_json(ut));
  return arr;
}

json traj_to_json(const Trajectory& x) {
  json arr = json::array();
  for (const Vec& xt : x) arr.push_back(vec_to_json(xt));
  return arr;
}

// JSON has no infinities; unattained infima are serialized as "-inf".
json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "+inf" : "-inf";
}

void emit(const json& report, const Options& opt) {
  const std::string text = dump_json(report);
  std::cout << text;
  if (!opt.out_path.empty()) {
    std::ofstream f(opt.out_path);
    if (!f) throw std::invalid_argument("cannot open --out file: " + opt.out_path);
    f << text;
  }
}

json riccati_block(const LqProblem& p, const RiccatiSolution& sol,
                   const ClosedLoopCheck& check, const Vec& x0) {
  json block;
  block["closed_loop_solvable"] = check.solvable;
  if (check.first_violation) {
    json v;
    v["t"] = check.first_violation->t;
    v["condition"] = to_string(check.first_violation->condition);
    block["first_violation"] = std::move(v);
  } else {
    block["first_violation"] = nullptr;
  }
  json borderline = json::array();
  for (int t = 0; t < p.N; ++t) {
    if (sol.regularity[t].psd_borderline) borderline.push_back(t);
  }
  block["borderline_steps"] = std::move(borderline);
  block["P0"] = mat_to_json(sol.P[0]);
  if (check.solvable) {
    block["value"] = value_function(sol, x0);
    block["K"] = mat_seq_to_json(sol.Khat);
  } else {
    block["value"] = nullptr;
  }
  return block;
}

json oracle_block(const StackedQuadratic& sq, const OracleReport& rep) {
  json block;
  block["verdict"] = to_string(rep.verdict);
  block["lambda_min"] = rep.lambda_min;
  block["uniform_convexity_margin"] = uniform_convexity_margin(sq);
  block["borderline"] = rep.borderline;
  block["attained"] = rep.attained;
  block["value"] = finite_or_string(rep.value);
  if (rep.minimizer) {
    block["minimizer"] = controls_to_json(unstack_controls(*rep.minimizer, sq.N, sq.m));
  } else {
    block["minimizer"] = nullptr;
  }
  return block;
}

json sweep_block(const PerturbationSweep& sweep, const OpenLoopClassification& cls) {
  json block;
  block["verdict"] = to_string(cls.verdict);
  block["controls_cauchy"] = cls.controls_cauchy;
  block["control_energy_diverged"] = cls.control_energy_diverged;
  block["value_diverged"] = cls.value_diverged;
  block["sup_control_energy"] = sweep.diagnostics.sup_control_energy;
  block["last_control_gap"] = cls.last_control_gap;
  block["certificate_residual"] =
      cls.certificate_residual ? json(*cls.certificate_residual) : json(nullptr);
  block["u_star"] = cls.u_star ? controls_to_json(*cls.u_star) : json(nullptr);
  block["V_eps_first"] = sweep.entries.front().value;
  block["V_eps_last"] = sweep.entries.back().value;
  json gains;
  gains["K"] = mat_seq_to_json(cls.gains.law.K);
  gains["window"] = static_cast<int>(cls.gains.law.window());
  gains["window_converged"] = cls.gains.window_converged;
  gains["tail_gain_diverged"] = cls.gains.tail_gain_diverged;
  block["weak_gains"] = std::move(gains);
  return block;
}

// Cross-route agreement. The three routes answer related but distinct
// questions; entries here are genuine contradictions or the known hazard of
// the perturbation route certifying a stationary point on indefinite data.
std::vector<std::string> find_discrepancies(const LqProblem& p, const Vec& x0,
                                            const ClosedLoopCheck& check,
                                            const RiccatiSolution& sol,
                                            const OracleReport& oracle,
                                            const OpenLoopClassification& cls) {
  std::vector<std::string> out;
  const bool oracle_solvable = oracle.verdict == OracleVerdict::Solvable;

  if (check.solvable && !oracle_solvable) {
    out.push_back(std::string("closed-loop test passed but the stacked oracle "
                              "reports ") + to_string(oracle.verdict));
  }
  if (check.solvable && oracle_solvable) {
    const double vr = value_function(sol, x0);
    if (std::abs(vr - oracle.value) > 1e-8 * (1.0 + std::abs(oracle.value))) {
      out.push_back("closed-loop value " + std::to_string(vr) +
                    " disagrees with oracle minimum " + std::to_string(oracle.value));
    }
  }
  if (cls.verdict == SweepVerdict::OpenLoopSolvable) {
    if (oracle.verdict == OracleVerdict::UnboundedBelow) {
      out.push_back("perturbation sweep certified a stationary control, but the "
                    "stacked Hessian is indefinite (cost unbounded below): the "
                    "certified control is a stationary point, not a minimizer");
    } else if (oracle.verdict == OracleVerdict::ConvexUnattained) {
      out.push_back("perturbation sweep certified a control but the oracle "
                    "reports an unattained convex infimum");
    } else if (cls.u_star) {
      const double c_star = cost(p, x0, *cls.u_star);
      if (std::abs(c_star - oracle.value) > 1e-6 * (1.0 + std::abs(oracle.value))) {
        out.push_back("cost of the certified control, " + std::to_string(c_star) +
                      ", disagrees with the oracle minimum " +
                      std::to_string(oracle.value));
      }
    }
  }
  if (cls.verdict == SweepVerdict::NotOpenLoopSolvable && oracle_solvable) {
    out.push_back("perturbation sweep reports divergence but the oracle found an "
                  "attained minimum");
  }
  if (check.solvable && cls.verdict == SweepVerdict::NotOpenLoopSolvable) {
    out.push_back("closed-loop test passed but the perturbation sweep diverged");
  }
  return out;
}

int cmd_classify(const LqProblem& p, const Options& opt) {
  const auto t_start = std::chrono::steady_clock::now();
  const Vec x0 = parse_x0(opt.x0_csv, p.n);

  const RiccatiSolution sol = solve_generalized_riccati(p);
  const ClosedLoopCheck check = check_closed_loop_solvable(sol);
  const StackedQuadratic sq = assemble_stacked_quadratic(p, x0);
  const OracleReport oracle = oracle_classify(sq);
  const EpsilonSchedule schedule =
      EpsilonSchedule::geometric(opt.eps0, opt.ratio, opt.steps);
  const PerturbationSweep sweep = run_sweep(p, x0, schedule, opt.threads);
  const OpenLoopClassification cls = classify_open_loop(p, sweep);

  json report;
  report["problem_digest"] = problem_digest(p);
  report["x0"] = vec_to_json(x0);
  report["riccati"] = riccati_block(p, sol, check, x0);
  report["oracle"] = oracle_block(sq, oracle);
  report["sweep"] = sweep_block(sweep, cls);

  const std::vector<std::string> issues =
      find_discrepancies(p, x0, check, sol, oracle, cls);
  json agreement;
  agreement["consistent"] = issues.empty();
  agreement["discrepancies"] = issues;
  report["agreement"] = std::move(agreement);

  if (opt.verbose) {
    json meta;
    meta["schedule"] = schedule.values;
    meta["threads"] = opt.threads;
    meta["elapsed_ms"] = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - t_start)
                             .count();
    report["meta"] = std::move(meta);
  }
  emit(report, opt);
  return 0;
}

int cmd_solve(const LqProblem& p, const Options& opt) {
  const Vec x0 = parse_x0(opt.x0_csv, p.n);

  const RiccatiSolution sol = solve_generalized_riccati(p);
  const ClosedLoopCheck check = check_closed_loop_solvable(sol);

  json report;
  report["problem_digest"] = problem_digest(p);
  report["x0"] = vec_to_json(x0);
  std::vector<std::string> warnings;

  if (check.solvable) {
    const ClosedLoopPolicy policy = closed_loop_policy(sol);
    const FeedbackRollout roll = simulate_feedback(p, x0, policy.law);
    report["path"] = "closed_loop";
    report["value"] = value_function(sol, x0);
    report["K"] = mat_seq_to_json(policy.law.K);
    report["free_params_zeroed"] = policy.free_params_zeroed;
    report["u"] = controls_to_json(roll.u);
    report["x"] = traj_to_json(roll.x);
  } else {
    const EpsilonSchedule schedule =
        EpsilonSchedule::geometric(opt.eps0, opt.ratio, opt.steps);
    const PerturbationSweep sweep = run_sweep(p, x0, schedule, opt.threads);
    const OpenLoopClassification cls = classify_open_loop(p, sweep);
    const StackedQuadratic sq = assemble_stacked_quadratic(p, x0);
    const OracleReport oracle = oracle_classify(sq);

    if (cls.verdict == SweepVerdict::OpenLoopSolvable) {
      const FeedbackRollout roll = apply_weak_law(p, x0, cls);
      report["path"] = "weak_closed_loop";
      report["value"] = cost(p, x0, *cls.u_star);
      report["u"] = controls_to_json(roll.u);
      report["x"] = traj_to_json(roll.x);
      json gains;
      gains["K"] = mat_seq_to_json(cls.gains.law.K);
      gains["window"] = static_cast<int>(cls.gains.law.window());
      gains["tail_gain_diverged"] = cls.gains.tail_gain_diverged;
      report["weak_gains"] = std::move(gains);
      report["certificate_residual"] = *cls.certificate_residual;
      if (oracle.verdict == OracleVerdict::UnboundedBelow) {
        warnings.push_back("stacked Hessian is indefinite: the returned control "
                           "is a certified stationary point, but the cost is "
                           "unbounded below for this x0");
      }
    } else {
      report["path"] = "none";
      report["sweep_verdict"] = to_string(cls.verdict);
      report["oracle_verdict"] = to_string(oracle.verdict);
      report["control_energy_diverged"] = cls.control_energy_diverged;
      report["value_diverged"] = cls.value_diverged;
    }
    if (check.first_violation) {
      warnings.push_back(std::string("closed-loop regularity failed at t=") +
                         std::to_string(check.first_violation->t) + ": " +
                         to_string(check.first_violation->condition));
    }
  }
  report["warnings"] = warnings;
  emit(report, opt);
  return 0;
}

int cmd_sweep(const LqProblem& p, const Options& opt) {
  const Vec x0 = parse_x0(opt.x0_csv, p.n);
  const EpsilonSchedule schedule =
      EpsilonSchedule::geometric(opt.eps0, opt.ratio, opt.steps);
  const PerturbationSweep sweep = run_sweep(p, x0, schedule, opt.threads);
  const OpenLoopClassification cls = classify_open_loop(p, sweep);

  const std::string csv_path = opt.out_path.empty() ? "sweep.csv" : opt.out_path;
  std::ofstream csv(csv_path);
  if (!csv) throw std::invalid_argument("cannot open --out file: " + csv_path);
  write_sweep_csv(csv, p, sweep);

  json summary = sweep_summary_json(sweep, cls);
  summary["problem_digest"] = problem_digest(p);
  summary["csv"] = csv_path;
  std::cout << dump_json(summary);
  return 0;
}

int cmd_oracle(const LqProblem& p, const Options& opt) {
  const Vec x0 = parse_x0(opt.x0_csv, p.n);
  const StackedQuadratic sq = assemble_stacked_quadratic(p, x0);
  const OracleReport rep = oracle_classify(sq);

  json report = oracle_block(sq, rep);
  report["problem_digest"] = problem_digest(p);
  report["x0"] = vec_to_json(x0);
  report["c"] = sq.c;
  Eigen::SelfAdjointEigenSolver<Mat> eig(sq.Huu, Eigen::EigenvaluesOnly);
  report["Huu_eigenvalues"] = std::vector<double>(
      eig.eigenvalues().data(), eig.eigenvalues().data() + eig.eigenvalues().size());
  if (opt.verbose) {
    report["Huu"] = mat_to_json(sq.Huu);
    report["g"] = vec_to_json(sq.g);
  }
  emit(report, opt);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-horizon LQ solvability analysis with indefinite weights"};
  app.require_subcommand(1);

  Options opt;
  auto add_common = [&opt](CLI::App* cmd, bool sweep_params) {
    cmd->add_option("problem", opt.problem_path, "problem JSON file")->required();
    cmd->add_option("--x0", opt.x0_csv, "initial state, comma-separated");
    cmd->add_option("--out", opt.out_path, "write the report to this file as well");
    cmd->add_flag("--echo", opt.echo, "print the canonical problem JSON and exit");
    cmd->add_flag("--verbose", opt.verbose, "include run metadata in the report");
    cmd->add_option("--threads", opt.threads, "worker threads for the sweep");
    if (sweep_params) {
      cmd->add_option("--eps-start", opt.eps0, "largest epsilon (default 1)");
      cmd->add_option("--eps-ratio", opt.ratio, "geometric ratio (default 0.5)");
      cmd->add_option("--eps-steps", opt.steps, "schedule length (default 40)");
    }
  };

  CLI::App* classify = app.add_subcommand("classify", "run all three solvability routes");
  CLI::App* solve = app.add_subcommand("solve", "compute the best available control");
  CLI::App* sweep = app.add_subcommand("sweep", "export the epsilon sweep as CSV");
  CLI::App* oracle = app.add_subcommand("oracle", "stacked quadratic analysis");
  add_common(classify, true);
  add_common(solve, true);
  add_common(sweep, true);
  add_common(oracle, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const LqProblem p = load_problem(opt.problem_path);
    if (opt.echo) {
      std::cout << dump_json(problem_to_json(p));
      return 0;
    }
    if (opt.threads < 1) {
      throw std::invalid_argument("--threads must be >= 1");
    }
    if (classify->parsed()) return cmd_classify(p, opt);
    if (solve->parsed()) return cmd_solve(p, opt);
    if (sweep->parsed()) return cmd_sweep(p, opt);
    if (oracle->parsed()) return cmd_oracle(p, opt);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
