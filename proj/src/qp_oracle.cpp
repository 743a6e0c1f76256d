#include "lqsolve/qp_oracle.hpp"

#include <limits>
#include <stdexcept>
#include <string>

namespace lqsolve {

StackedQuadratic assemble_stacked_quadratic(const LqProblem& p, const Vec& x0) {
  const int dim = p.N * p.m;
  StackedQuadratic sq;
  sq.N = p.N;
  sq.m = p.m;
  sq.Huu = Mat::Zero(dim, dim);
  sq.g = Vec::Zero(dim);

  const ControlSequence zero(p.N, Vec::Zero(p.m));
  const Trajectory xbar = simulate(p, x0, zero);
  sq.c = cost(p, x0, zero);

  // Impulse responses: column a = (t, j) is the trajectory from x0 = 0 under
  // a unit pulse on control coordinate j at step t.
  std::vector<Trajectory> chi(dim);
  for (int t = 0; t < p.N; ++t) {
    for (int j = 0; j < p.m; ++j) {
      ControlSequence pulse(p.N, Vec::Zero(p.m));
      pulse[t](j) = 1.0;
      chi[t * p.m + j] = simulate(p, Vec::Zero(p.n), pulse);
    }
  }

  for (int a = 0; a < dim; ++a) {
    const int ta = a / p.m, ja = a % p.m;
    double lin = 0.0;
    for (int tau = 0; tau < p.N; ++tau) {
      lin += chi[a][tau].dot(p.Q[tau] * xbar[tau]);
    }
    lin += chi[a][p.N].dot(p.H * xbar[p.N]);
    lin += p.S[ta].row(ja).dot(xbar[ta]);
    sq.g(a) = 2.0 * lin;

    for (int b = a; b < dim; ++b) {
      const int tb = b / p.m, jb = b % p.m;
      double quad = 0.0;
      for (int tau = 0; tau < p.N; ++tau) {
        quad += chi[a][tau].dot(p.Q[tau] * chi[b][tau]);
      }
      quad += chi[a][p.N].dot(p.H * chi[b][p.N]);
      quad += p.S[ta].row(ja).dot(chi[b][ta]);
      quad += p.S[tb].row(jb).dot(chi[a][tb]);
      if (ta == tb) quad += p.R[ta](ja, jb);
      sq.Huu(a, b) = 2.0 * quad;
      sq.Huu(b, a) = sq.Huu(a, b);
    }
  }
  return sq;
}

double stacked_eval(const StackedQuadratic& sq, const Vec& u_stacked) {
  if (u_stacked.size() != sq.g.size()) {
    throw std::invalid_argument("stacked_eval: control vector has dimension " +
                                std::to_string(u_stacked.size()) + ", expected " +
                                std::to_string(sq.g.size()));
  }
  return sq.c + sq.g.dot(u_stacked) + 0.5 * u_stacked.dot(sq.Huu * u_stacked);
}

Vec stack_controls(const ControlSequence& u) {
  Eigen::Index dim = 0;
  for (const Vec& ut : u) dim += ut.size();
  Vec stacked(dim);
  Eigen::Index at = 0;
  for (const Vec& ut : u) {
    stacked.segment(at, ut.size()) = ut;
    at += ut.size();
  }
  return stacked;
}

ControlSequence unstack_controls(const Vec& u_stacked, int N, int m) {
  if (u_stacked.size() != static_cast<Eigen::Index>(N) * m) {
    throw std::invalid_argument("unstack_controls: dimension mismatch");
  }
  ControlSequence u(N);
  for (int t = 0; t < N; ++t) u[t] = u_stacked.segment(t * m, m);
  return u;
}

OracleReport oracle_classify(const StackedQuadratic& sq) {
  OracleReport rep;
  Eigen::SelfAdjointEigenSolver<Mat> eig(sq.Huu, Eigen::EigenvaluesOnly);
  rep.lambda_min = eig.eigenvalues().minCoeff();
  rep.eig_tolerance = 1e-9 * (1.0 + max_norm(sq.Huu));
  rep.borderline = rep.lambda_min < 0.0 && rep.lambda_min >= -rep.eig_tolerance;

  const double neg_inf = -std::numeric_limits<double>::infinity();
  if (rep.lambda_min < -rep.eig_tolerance) {
    rep.verdict = OracleVerdict::UnboundedBelow;
    rep.attained = false;
    rep.value = neg_inf;
    return rep;
  }
  if (!range_included(sq.g, sq.Huu)) {
    // Convex but with a linear descent direction in the kernel of Huu.
    rep.verdict = OracleVerdict::ConvexUnattained;
    rep.attained = false;
    rep.value = neg_inf;
    return rep;
  }
  rep.verdict = OracleVerdict::Solvable;
  rep.attained = true;
  rep.minimizer = Vec(-(pinv(sq.Huu) * sq.g));
  rep.value = stacked_eval(sq, *rep.minimizer);
  return rep;
}

double uniform_convexity_margin(const StackedQuadratic& sq) {
  Eigen::SelfAdjointEigenSolver<Mat> eig(sq.Huu, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff() / 2.0;
}

const char* to_string(OracleVerdict v) {
  switch (v) {
    case OracleVerdict::Solvable:
      return "solvable";
    case OracleVerdict::ConvexUnattained:
      return "convex_unattained";
    case OracleVerdict::UnboundedBelow:
      return "unbounded_below";
  }
  return "unknown";
}

}  // namespace lqsolve
