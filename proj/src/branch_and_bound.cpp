#include "fairrepair/branch_and_bound.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <queue>

namespace fairrepair {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::optimal: return "optimal";
    case MilpStatus::infeasible: return "infeasible";
    case MilpStatus::unbounded: return "unbounded";
    case MilpStatus::timeout: return "timeout";
  }
  return "unknown";
}

namespace {

// Accepted residual of an incumbent, in units of the LP feasibility tolerance.
constexpr double kAuditFactor = 10.0;

struct Node {
  std::vector<std::int8_t> fixing;  // per binary: -1 free, 0, 1
  std::shared_ptr<const SimplexSolver::Basis> basis;
  LpSolution lp;
  double bound = 0.0;
  int depth = 0;
  long id = 0;
};

struct NodeOrder {
  bool operator()(const std::shared_ptr<Node>& a, const std::shared_ptr<Node>& b) const {
    // priority_queue pops the "largest"; we want the smallest bound first.
    if (a->bound != b->bound) return a->bound > b->bound;
    if (a->depth != b->depth) return a->depth < b->depth;
    return a->id > b->id;
  }
};

}  // namespace

MilpSolution solve_milp(const MilpProblem& problem, const MilpLimits& limits) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto out_of_time = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count() > limits.time_limit_seconds;
  };

  const std::vector<int> binaries = problem.binaries();
  SimplexSolver solver(problem, limits.lp);
  MilpSolution result;
  double incumbent = kInf;

  auto apply_fixing = [&](const std::vector<std::int8_t>& fixing) {
    for (std::size_t k = 0; k < binaries.size(); ++k) {
      const auto& v = problem.variable(binaries[k]);
      if (fixing[k] < 0) {
        solver.set_bounds(binaries[k], v.lower, v.upper);
      } else {
        solver.set_bounds(binaries[k], fixing[k], fixing[k]);
      }
    }
  };

  long next_id = 0;
  // Solves the node LP from `warm`, filling lp/bound/basis.
  auto evaluate = [&](Node& node, const std::shared_ptr<const SimplexSolver::Basis>& warm) {
    if (warm) solver.set_basis(*warm);
    apply_fixing(node.fixing);
    node.lp = solver.solve();
    node.bound = node.lp.objective;
    node.basis = std::make_shared<SimplexSolver::Basis>(solver.basis());
  };

  auto try_incumbent = [&](const Node& node) {
    // Fix every binary at its rounded value and re-solve.
    std::vector<std::int8_t> fixing(binaries.size());
    for (std::size_t k = 0; k < binaries.size(); ++k) {
      fixing[k] = static_cast<std::int8_t>(std::lround(node.lp.values[binaries[k]]));
    }
    Node polished;
    polished.fixing = std::move(fixing);
    auto with_exact_binaries = [&] {
      std::vector<double> v = polished.lp.values;
      for (std::size_t k = 0; k < binaries.size(); ++k) v[binaries[k]] = polished.fixing[k];
      return v;
    };
    evaluate(polished, node.basis);
    std::vector<double> values = with_exact_binaries();
    // A fixed binary left basic may sit up to the feasibility tolerance off
    // its value, which big-M rows amplify. From the slack basis every
    // binary is nonbasic at its exact value and never enters.
    if (polished.lp.status != LpStatus::optimal ||
        problem.max_violation(values) > kAuditFactor * limits.lp.feasibility_tol) {
      solver.reset_basis();
      apply_fixing(polished.fixing);
      polished.lp = solver.solve();
      values = with_exact_binaries();
    }
    if (polished.lp.status != LpStatus::optimal) return;
    if (polished.lp.objective < incumbent) {
      incumbent = polished.lp.objective;
      result.values = std::move(values);
    }
  };

  auto root = std::make_shared<Node>();
  root->fixing.assign(binaries.size(), -1);
  root->id = next_id++;
  evaluate(*root, nullptr);
  if (root->lp.status == LpStatus::unbounded) {
    result.status = MilpStatus::unbounded;
    return result;
  }
  if (root->lp.status != LpStatus::optimal) {
    result.status = root->lp.status == LpStatus::infeasible ? MilpStatus::infeasible
                                                            : MilpStatus::timeout;
    result.nodes = 1;
    return result;
  }

  std::priority_queue<std::shared_ptr<Node>, std::vector<std::shared_ptr<Node>>, NodeOrder> open;
  open.push(root);
  bool stopped = false;
  double best_bound = root->bound;

  auto gap_closed = [&](double bound) {
    return incumbent - bound <= limits.relative_gap * (1.0 + std::abs(incumbent));
  };

  while (!open.empty()) {
    auto node = open.top();
    best_bound = node->bound;
    if (std::isfinite(incumbent) && gap_closed(node->bound)) break;
    if (result.nodes >= limits.max_nodes || out_of_time()) {
      stopped = true;
      break;
    }
    open.pop();
    ++result.nodes;

    // Most fractional binary.
    int branch = -1;
    double most = limits.integrality_tol;
    for (std::size_t k = 0; k < binaries.size(); ++k) {
      if (node->fixing[k] >= 0) continue;
      const double v = node->lp.values[binaries[k]];
      const double frac = std::abs(v - std::round(v));
      if (frac > most) {
        most = frac;
        branch = static_cast<int>(k);
      }
    }
    if (branch < 0) {
      try_incumbent(*node);
      continue;
    }

    const double v = node->lp.values[binaries[branch]];
    const std::int8_t first = v >= 0.5 ? 1 : 0;
    for (std::int8_t side : {first, static_cast<std::int8_t>(1 - first)}) {
      auto child = std::make_shared<Node>();
      child->fixing = node->fixing;
      child->fixing[branch] = side;
      child->depth = node->depth + 1;
      child->id = next_id++;
      evaluate(*child, node->basis);
      if (child->lp.status != LpStatus::optimal) continue;
      if (std::isfinite(incumbent) && gap_closed(child->bound)) continue;
      open.push(child);
    }
  }

  if (open.empty()) best_bound = incumbent;
  result.best_bound = std::min(best_bound, incumbent);
  if (!result.has_incumbent()) {
    result.status = stopped ? MilpStatus::timeout : MilpStatus::infeasible;
    return result;
  }
  result.objective = problem.objective_value(result.values);
  result.gap = incumbent - result.best_bound;
  result.status = stopped ? MilpStatus::timeout : MilpStatus::optimal;
  return result;
}

}  // namespace fairrepair
