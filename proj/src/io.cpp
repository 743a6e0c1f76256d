#include "lqsolve/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

namespace lqsolve {

using nlohmann::json;

namespace {

void fail(const std::string& msg) { throw std::invalid_argument(msg); }

Mat matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array() || j.empty()) fail(what + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Mat m;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    if (!row.is_array() || row.empty()) {
      fail(what + ": row " + std::to_string(r) + " is not a non-empty array");
    }
    if (r == 0) {
      cols = row.size();
      m.resize(rows, cols);
    } else if (row.size() != cols) {
      fail(what + ": row " + std::to_string(r) + " has " +
           std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number()) {
        fail(what + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
             ") is not a number");
      }
      const double v = row[c].get<double>();
      if (!std::isfinite(v)) {
        fail(what + ": entry (" + std::to_string(r) + "," + std::to_string(c) +
             ") is not finite");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return m;
}

bool looks_like_matrix(const json& j) {
  return j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() &&
         j[0][0].is_number();
}

// A constant matrix is repeated over the horizon; an explicit sequence must
// have exactly N entries.
std::vector<Mat> sequence_from_json(const json& j, int N, const std::string& what) {
  if (looks_like_matrix(j)) {
    return std::vector<Mat>(static_cast<std::size_t>(N), matrix_from_json(j, what));
  }
  if (!j.is_array() || j.empty()) {
    fail(what + ": expected a matrix or an array of matrices");
  }
  if (j.size() != static_cast<std::size_t>(N)) {
    fail(what + ": sequence has " + std::to_string(j.size()) +
         " matrices, expected N=" + std::to_string(N));
  }
  std::vector<Mat> seq;
  seq.reserve(j.size());
  for (std::size_t t = 0; t < j.size(); ++t) {
    seq.push_back(matrix_from_json(j[t], what + "[" + std::to_string(t) + "]"));
  }
  return seq;
}

int int_field(const json& doc, const std::string& key) {
  if (!doc.contains(key)) fail("missing field \"" + key + "\"");
  const json& j = doc.at(key);
  if (!j.is_number_integer() || j.get<long long>() < 1) {
    fail("field \"" + key + "\" must be a positive integer");
  }
  return static_cast<int>(j.get<long long>());
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_number(const json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) return "null";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
  }
  return j.dump();
}

bool all_primitive(const json& arr) {
  for (const json& e : arr) {
    if (e.is_array() || e.is_object()) return false;
  }
  return true;
}

void dump_rec(const json& j, std::string& out, int depth) {
  const std::string pad(2 * static_cast<std::size_t>(depth), ' ');
  const std::string pad_in(2 * static_cast<std::size_t>(depth + 1), ' ');
  if (j.is_object()) {
    if (j.empty()) {
      out += "{}";
      return;
    }
    out += "{\n";
    bool first = true;
    for (const auto& [key, value] : j.items()) {  // keys are already sorted
      if (!first) out += ",\n";
      first = false;
      out += pad_in + json(key).dump() + ": ";
      dump_rec(value, out, depth + 1);
    }
    out += "\n" + pad + "}";
  } else if (j.is_array()) {
    if (j.empty()) {
      out += "[]";
      return;
    }
    if (all_primitive(j)) {
      // Leaf arrays (matrix rows, schedules) stay on one line.
      out += "[";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i > 0) out += ", ";
        out += j[i].is_number() ? format_number(j[i]) : j[i].dump();
      }
      out += "]";
      return;
    }
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      if (i > 0) out += ",\n";
      out += pad_in;
      dump_rec(j[i], out, depth + 1);
    }
    out += "\n" + pad + "]";
  } else if (j.is_number()) {
    out += format_number(j);
  } else {
    out += j.dump();
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

LqProblem problem_from_json(const json& doc) {
  if (!doc.is_object()) fail("problem document must be a JSON object");
  const int N = int_field(doc, "N");
  const int n = int_field(doc, "n");
  const int m = int_field(doc, "m");
  for (const char* key : {"A", "B", "Q", "S", "R", "H"}) {
    if (!doc.contains(key)) fail(std::string("missing field \"") + key + "\"");
  }
  LqProblem p(N, sequence_from_json(doc.at("A"), N, "A"),
              sequence_from_json(doc.at("B"), N, "B"),
              sequence_from_json(doc.at("Q"), N, "Q"),
              sequence_from_json(doc.at("S"), N, "S"),
              sequence_from_json(doc.at("R"), N, "R"),
              matrix_from_json(doc.at("H"), "H"));
  if (p.n != n) {
    fail("field \"n\"=" + std::to_string(n) + " does not match A[0], which is " +
         std::to_string(p.n) + "x" + std::to_string(p.n));
  }
  if (p.m != m) {
    fail("field \"m\"=" + std::to_string(m) + " does not match B[0], which has " +
         std::to_string(p.m) + " columns");
  }
  return p;
}

LqProblem load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open problem file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    fail("problem file " + path + ": " + e.what());
  }
  return problem_from_json(doc);
}

json problem_to_json(const LqProblem& p) {
  json doc;
  doc["N"] = p.N;
  doc["n"] = p.n;
  doc["m"] = p.m;
  json seqs[5] = {json::array(), json::array(), json::array(), json::array(),
                  json::array()};
  for (int t = 0; t < p.N; ++t) {
    seqs[0].push_back(matrix_to_json(p.A[t]));
    seqs[1].push_back(matrix_to_json(p.B[t]));
    seqs[2].push_back(matrix_to_json(p.Q[t]));
    seqs[3].push_back(matrix_to_json(p.S[t]));
    seqs[4].push_back(matrix_to_json(p.R[t]));
  }
  doc["A"] = std::move(seqs[0]);
  doc["B"] = std::move(seqs[1]);
  doc["Q"] = std::move(seqs[2]);
  doc["S"] = std::move(seqs[3]);
  doc["R"] = std::move(seqs[4]);
  doc["H"] = matrix_to_json(p.H);
  return doc;
}

std::string dump_json(const json& doc) {
  std::string out;
  dump_rec(doc, out, 0);
  out += "\n";
  return out;
}

std::string problem_digest(const LqProblem& p) {
  const std::uint64_t h = fnv1a64(dump_json(problem_to_json(p)));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_sweep_csv(std::ostream& out, const LqProblem& p,
                     const PerturbationSweep& sweep) {
  out << "epsilon,t";
  for (int i = 0; i < p.m; ++i) {
    for (int j = 0; j < p.n; ++j) out << ",K_" << i << "_" << j;
  }
  for (int i = 0; i < p.m; ++i) out << ",u_" << i;
  out << ",V_eps,kernel_flag\n";

  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (const SweepEntry& e : sweep.entries) {
    for (int t = 0; t < p.N; ++t) {
      put(e.epsilon);
      out << "," << t;
      for (int i = 0; i < p.m; ++i) {
        for (int j = 0; j < p.n; ++j) {
          out << ",";
          put(e.K[t](i, j));
        }
      }
      for (int i = 0; i < p.m; ++i) {
        out << ",";
        put(e.u[t](i));
      }
      out << ",";
      put(e.value);
      const int flag = (e.flags[t].invertible ? 0 : 1) |
                       (e.flags[t].regularity_ok ? 0 : 2);
      out << "," << flag << "\n";
    }
  }
}

json sweep_summary_json(const PerturbationSweep& sweep,
                        const OpenLoopClassification& cls) {
  json doc;
  doc["schedule"] = sweep.schedule.values;
  json values = json::array();
  for (const SweepEntry& e : sweep.entries) {
    values.push_back(json::array({e.epsilon, e.value}));
  }
  doc["values"] = std::move(values);
  doc["sup_control_energy"] = sweep.diagnostics.sup_control_energy;
  doc["control_gaps"] = sweep.diagnostics.control_gaps;
  doc["gain_window_gaps"] = sweep.diagnostics.gain_window_gaps;
  doc["verdict"] = to_string(cls.verdict);
  doc["controls_cauchy"] = cls.controls_cauchy;
  doc["control_energy_diverged"] = cls.control_energy_diverged;
  doc["value_diverged"] = cls.value_diverged;
  doc["window_converged"] = cls.gains.window_converged;
  doc["tail_gain_diverged"] = cls.gains.tail_gain_diverged;
  if (cls.certificate_residual) {
    doc["certificate_residual"] = *cls.certificate_residual;
  } else {
    doc["certificate_residual"] = nullptr;
  }
  if (cls.u_star) {
    json u = json::array();
    for (const Vec& ut : *cls.u_star) {
      json row = json::array();
      for (Eigen::Index i = 0; i < ut.size(); ++i) row.push_back(ut(i));
      u.push_back(std::move(row));
    }
    doc["u_star"] = std::move(u);
  } else {
    doc["u_star"] = nullptr;
  }
  json flagged = json::array();
  for (const SweepEntry& e : sweep.entries) {
    for (std::size_t t = 0; t < e.flags.size(); ++t) {
      if (e.flags[t].invertible && e.flags[t].regularity_ok) continue;
      json f;
      f["epsilon"] = e.epsilon;
      f["t"] = static_cast<int>(t);
      f["kernel_singular"] = !e.flags[t].invertible;
      f["regularity_violated"] = !e.flags[t].regularity_ok;
      flagged.push_back(std::move(f));
    }
  }
  doc["flagged_steps"] = std::move(flagged);
  return doc;
}

}  // namespace lqsolve
