#pragma once

#include "fairrepair/milp.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cstdint>
#include <memory>
#include <vector>

namespace fairrepair {

struct LpOptions {
  double feasibility_tol = 1e-8;
  double optimality_tol = 1e-9;
  // Smallest |alpha| accepted as a pivot in the ratio test.
  double pivot_tol = 1e-7;
  int refactor_interval = 50;
  // Consecutive degenerate pivots before the bounds of degenerate basic
  // variables are relaxed by ~perturbation * (1 + |bound|). After
  // max_perturbations rounds, Bland's rule takes over instead.
  int degenerate_limit = 40;
  double perturbation = 1e-7;
  int max_perturbations = 20;
  long max_iterations = 0;  // 0: 50 * (rows + columns) + 10000
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus status);

struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  std::vector<double> values;  // one per problem variable
  double objective = 0.0;
  // d(objective)/d(rhs) per constraint.
  std::vector<double> duals;
  // c_j - duals . A_j per variable.
  std::vector<double> reduced_costs;
  long iterations = 0;
};

// Bounded-variable revised primal simplex. Every row gets a slack
// (a.x + s = rhs, with the sense encoded in the slack bounds); phase 1
// minimises the sum of bound violations of the basic variables, so any
// starting basis is acceptable and bases can be reused after bound changes.
class SimplexSolver {
 public:
  // Binary variables are relaxed to their [lower, upper] interval.
  explicit SimplexSolver(const MilpProblem& problem, LpOptions options = {});
  ~SimplexSolver();

  void set_bounds(int var, double lower, double upper);
  double lower_bound(int var) const { return lb_[static_cast<std::size_t>(var)]; }
  double upper_bound(int var) const { return ub_[static_cast<std::size_t>(var)]; }

  struct Basis {
    std::vector<int> head;
    std::vector<std::int8_t> state;
  };
  Basis basis() const { return {head_, state_}; }
  void set_basis(const Basis& basis);
  // All-slack basis; every structural variable nonbasic at a bound.
  void reset_basis() { reset_to_slack_basis(); }

  LpSolution solve();

 private:
  enum State : std::int8_t { kBasic = 0, kAtLower = 1, kAtUpper = 2, kFree = 3 };

  void reset_to_slack_basis();
  void place_nonbasic(int j);
  bool refactor();
  void recompute_basic_values();
  Eigen::VectorXd ftran(const Eigen::VectorXd& v) const;
  Eigen::VectorXd btran(const Eigen::VectorXd& v) const;
  double column_dot(const Eigen::VectorXd& y, int j) const;
  bool basic_infeasible(int row, double& violation) const;

  LpOptions opt_;
  int n_ = 0;  // structural columns
  int m_ = 0;  // rows
  Eigen::SparseMatrix<double> a_;  // m x (n + m), slacks last
  Eigen::VectorXd rhs_;
  std::vector<double> cost_, lb_, ub_, x_;
  std::vector<int> head_;
  std::vector<int> row_of_;
  std::vector<std::int8_t> state_;

  using Lu = Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>>;
  std::unique_ptr<Lu> lu_;
  std::vector<std::pair<int, Eigen::VectorXd>> etas_;
};

// Solves the continuous relaxation of `problem`.
LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options = {});

}  // namespace fairrepair
