#pragma once

// Problem-file loading, canonical serialization, and sweep export.
//
// A problem file is a JSON object {"n", "m", "N", "A", "B", "Q", "S", "R",
// "H"}. Each of A, B, Q, S, R is either a single matrix (constant over the
// horizon) or an array of N matrices; H is a single matrix. A matrix is an
// array of rows, each an array of finite numbers, row-major.
//
// The canonical form expands constants to full sequences, sorts object keys,
// and prints every float with 17 significant digits, so re-serializing a
// canonical document is byte-stable and dumps are reproducible across runs.

#include <iosfwd>
#include <string>

#include "json.hpp"
#include "lqsolve/perturbation.hpp"
#include "lqsolve/problem.hpp"

namespace lqsolve {

// Parses and validates a problem document. Throws std::invalid_argument with
// the offending field named; file/stream variants add parse diagnostics.
LqProblem problem_from_json(const nlohmann::json& doc);
LqProblem load_problem(const std::string& path);

// Canonical (expanded) document for a validated problem.
nlohmann::json problem_to_json(const LqProblem& p);

// Deterministic serialization: keys sorted, 2-space indent, floats at 17
// significant digits, trailing newline.
std::string dump_json(const nlohmann::json& doc);

// FNV-1a 64-bit over the canonical serialization, as a hex string.
std::string problem_digest(const LqProblem& p);

// One CSV row per (epsilon, t): epsilon, t, gain entries (row-major),
// control entries, the value V_eps, and a kernel flag (0 = clean,
// 1 = singular kernel, 2 = regularity bound violated, 3 = both).
void write_sweep_csv(std::ostream& out, const LqProblem& p,
                     const PerturbationSweep& sweep);

// Machine-readable sweep summary: schedule, values, diagnostics, verdict.
nlohmann::json sweep_summary_json(const PerturbationSweep& sweep,
                                  const OpenLoopClassification& cls);

}  // namespace lqsolve
