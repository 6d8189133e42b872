#pragma once

#include "fairrepair/milp.hpp"
#include "fairrepair/simplex.hpp"

#include <vector>

namespace fairrepair {

struct MilpLimits {
  long max_nodes = 200000;
  double time_limit_seconds = 600.0;
  // Incumbent is optimal once (incumbent - bound) <= gap * (1 + |incumbent|).
  double relative_gap = 1e-6;
  double integrality_tol = 1e-6;
  LpOptions lp{};
};

enum class MilpStatus { optimal, infeasible, unbounded, timeout };

const char* to_string(MilpStatus status);

struct MilpSolution {
  MilpStatus status = MilpStatus::infeasible;
  std::vector<double> values;
  double objective = kInf;
  double best_bound = -kInf;
  double gap = kInf;
  long nodes = 0;
  bool has_incumbent() const { return !values.empty(); }
};

// LP-based branch and bound over the binary variables. Best-bound node
// selection (ties: deeper node, then creation order); branches on the most
// fractional binary (ties: lowest variable id). Child LPs are warm-started
// from the parent basis. Integral LP solutions are polished by re-solving
// with every binary fixed, so reported binaries are exactly 0 or 1.
MilpSolution solve_milp(const MilpProblem& problem, const MilpLimits& limits = {});

}  // namespace fairrepair
