#pragma once

// Independent reference computations shared by the unit and acceptance
// tests. Nothing here calls the branch-and-bound solver.

#include "fairrepair/milp.hpp"
#include "fairrepair/model.hpp"
#include "fairrepair/rng.hpp"
#include "fairrepair/simplex.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace fairrepair::testing {

// Copy of `problem` with every binary fixed to the given 0/1 value.
inline MilpProblem fix_binaries(const MilpProblem& problem, const std::vector<int>& assignment) {
  MilpProblem out;
  std::size_t k = 0;
  for (const auto& v : problem.variables()) {
    if (v.type == VarType::binary) {
      const double val = assignment.at(k++);
      out.add_continuous(v.name, val, val, v.role);
    } else {
      out.add_continuous(v.name, v.lower, v.upper, v.role);
    }
  }
  for (const auto& c : problem.constraints()) out.add_constraint(c.name, c.terms, c.sense, c.rhs);
  out.set_objective(problem.objective());
  return out;
}

// Minimum over every binary assignment of the LP with those binaries fixed;
// +inf when no assignment is feasible.
inline double enumerate_binaries(const MilpProblem& problem) {
  const std::size_t nb = problem.binaries().size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < (std::size_t{1} << nb); ++mask) {
    std::vector<int> a(nb);
    for (std::size_t k = 0; k < nb; ++k) a[k] = static_cast<int>((mask >> k) & 1U);
    const LpSolution s = solve_lp(fix_binaries(problem, a));
    if (s.status == LpStatus::optimal) best = std::min(best, s.objective);
  }
  return best;
}

// A feasible, bounded LP  min c.x  s.t.  A x <= b,  0 <= x <= u  and its
// Lagrangian dual written as  min b.y + u.w  s.t.  A^T y + w >= -c,  y, w >= 0
// (dual optimum = -primal optimum).
struct LpPair {
  MilpProblem primal;
  MilpProblem dual;
};

inline LpPair random_lp_pair(std::uint64_t seed) {
  Rng rng(seed);
  const int n = 2 + static_cast<int>(rng.index(7));
  const int m = 1 + static_cast<int>(rng.index(7));
  Matrix a(m, n);
  Vector c(n), u(n), x0(n);
  for (int j = 0; j < n; ++j) {
    c(j) = rng.uniform(-3.0, 3.0);
    u(j) = rng.uniform(0.5, 5.0);
    x0(j) = rng.uniform(0.0, u(j));
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(-2.0, 2.0);
  }
  const Vector b = a * x0 + Vector::NullaryExpr(m, [&](Eigen::Index) { return rng.uniform(0.0, 1.0); });

  LpPair out;
  for (int j = 0; j < n; ++j) out.primal.add_continuous("x" + std::to_string(j), 0.0, u(j));
  for (int i = 0; i < m; ++i) {
    std::vector<Term> t;
    for (int j = 0; j < n; ++j) {
      if (a(i, j) != 0.0) t.push_back({j, a(i, j)});
    }
    out.primal.add_constraint("r" + std::to_string(i), std::move(t), Sense::le, b(i));
  }
  std::vector<Term> obj;
  for (int j = 0; j < n; ++j) obj.push_back({j, c(j)});
  out.primal.set_objective(obj);

  for (int i = 0; i < m; ++i) out.dual.add_continuous("y" + std::to_string(i), 0.0, kInf);
  for (int j = 0; j < n; ++j) out.dual.add_continuous("w" + std::to_string(j), 0.0, kInf);
  for (int j = 0; j < n; ++j) {
    std::vector<Term> t;
    for (int i = 0; i < m; ++i) {
      if (a(i, j) != 0.0) t.push_back({i, a(i, j)});
    }
    t.push_back({m + j, 1.0});
    out.dual.add_constraint("d" + std::to_string(j), std::move(t), Sense::ge, -c(j));
  }
  std::vector<Term> dobj;
  for (int i = 0; i < m; ++i) dobj.push_back({i, b(i)});
  for (int j = 0; j < n; ++j) dobj.push_back({m + j, u(j)});
  out.dual.set_objective(dobj);
  return out;
}

// A feasible MILP with `nb` binaries gating bounded continuous variables
// through big-M rows, plus random dense rows built around a feasible point.
inline MilpProblem random_milp(std::uint64_t seed, int nb) {
  Rng rng(seed);
  const int nc = 2 + static_cast<int>(rng.index(4));
  MilpProblem p;
  std::vector<double> point;
  for (int k = 0; k < nb; ++k) {
    p.add_binary("z" + std::to_string(k));
    point.push_back(static_cast<double>(rng.index(2)));
  }
  for (int j = 0; j < nc; ++j) {
    p.add_continuous("x" + std::to_string(j), -5.0, 5.0);
    point.push_back(rng.uniform(-5.0, 5.0));
  }
  // x_j <= 5 z_k couplings, made true at the point by raising x's bound there.
  for (int j = 0; j < nc && nb > 0; ++j) {
    const int k = static_cast<int>(rng.index(static_cast<std::uint64_t>(nb)));
    const double lhs = point[static_cast<std::size_t>(nb + j)] - 5.0 * point[static_cast<std::size_t>(k)];
    p.add_constraint("g" + std::to_string(j), {{nb + j, 1.0}, {k, -5.0}}, Sense::le, std::max(0.0, lhs));
  }
  const int rows = 2 + static_cast<int>(rng.index(5));
  for (int i = 0; i < rows; ++i) {
    std::vector<Term> t;
    double act = 0.0;
    for (int v = 0; v < nb + nc; ++v) {
      if (rng.uniform() < 0.4) continue;
      const double coef = rng.uniform(-3.0, 3.0);
      t.push_back({v, coef});
      act += coef * point[static_cast<std::size_t>(v)];
    }
    if (t.empty()) continue;
    if (rng.uniform() < 0.5) {
      p.add_constraint("r" + std::to_string(i), std::move(t), Sense::le, act + rng.uniform(0.0, 2.0));
    } else {
      p.add_constraint("r" + std::to_string(i), std::move(t), Sense::ge, act - rng.uniform(0.0, 2.0));
    }
  }
  std::vector<Term> obj;
  for (int v = 0; v < nb + nc; ++v) obj.push_back({v, rng.uniform(-4.0, 4.0)});
  p.set_objective(obj);
  return p;
}

}  // namespace fairrepair::testing
