#include "fairrepair/simplex.hpp"

#include "fairrepair/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairrepair {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

SimplexSolver::SimplexSolver(const MilpProblem& problem, LpOptions options)
    : opt_(options),
      n_(static_cast<int>(problem.num_variables())),
      m_(static_cast<int>(problem.num_constraints())) {
  problem.validate();
  const int total = n_ + m_;
  std::vector<Eigen::Triplet<double>> triplets;
  rhs_.resize(m_);
  cost_.assign(total, 0.0);
  lb_.assign(total, 0.0);
  ub_.assign(total, 0.0);
  for (int j = 0; j < n_; ++j) {
    lb_[j] = problem.variable(j).lower;
    ub_[j] = problem.variable(j).upper;
  }
  for (const auto& t : problem.objective()) cost_[t.var] += t.coeff;
  for (int i = 0; i < m_; ++i) {
    const auto& c = problem.constraints()[i];
    for (const auto& t : c.terms) triplets.emplace_back(i, t.var, t.coeff);
    triplets.emplace_back(i, n_ + i, 1.0);
    rhs_(i) = c.rhs;
    switch (c.sense) {
      case Sense::le: lb_[n_ + i] = 0.0; ub_[n_ + i] = kInf; break;
      case Sense::ge: lb_[n_ + i] = -kInf; ub_[n_ + i] = 0.0; break;
      case Sense::eq: lb_[n_ + i] = 0.0; ub_[n_ + i] = 0.0; break;
    }
  }
  a_.resize(m_, total);
  a_.setFromTriplets(triplets.begin(), triplets.end());
  a_.makeCompressed();
  x_.assign(total, 0.0);
  reset_to_slack_basis();
}

SimplexSolver::~SimplexSolver() = default;

void SimplexSolver::place_nonbasic(int j) {
  auto& s = state_[j];
  const bool lo_finite = std::isfinite(lb_[j]);
  const bool hi_finite = std::isfinite(ub_[j]);
  if (s == kAtLower && !lo_finite) s = hi_finite ? kAtUpper : kFree;
  if (s == kAtUpper && !hi_finite) s = lo_finite ? kAtLower : kFree;
  if (s == kFree && (lo_finite || hi_finite)) s = lo_finite ? kAtLower : kAtUpper;
  x_[j] = s == kAtLower ? lb_[j] : s == kAtUpper ? ub_[j] : 0.0;
}

void SimplexSolver::reset_to_slack_basis() {
  const int total = n_ + m_;
  state_.assign(total, kAtLower);
  head_.resize(m_);
  row_of_.assign(total, -1);
  for (int j = 0; j < n_; ++j) place_nonbasic(j);
  for (int i = 0; i < m_; ++i) {
    head_[i] = n_ + i;
    row_of_[n_ + i] = i;
    state_[n_ + i] = kBasic;
  }
  if (!refactor()) throw SolverError("slack basis failed to factorize");
  recompute_basic_values();
}

void SimplexSolver::set_bounds(int var, double lower, double upper) {
  if (lower > upper) throw InputError("set_bounds: lower exceeds upper");
  lb_[var] = lower;
  ub_[var] = upper;
  if (state_[var] != kBasic) {
    place_nonbasic(var);
    recompute_basic_values();
  }
}

void SimplexSolver::set_basis(const Basis& basis) {
  const int total = n_ + m_;
  if (static_cast<int>(basis.head.size()) != m_ || static_cast<int>(basis.state.size()) != total) {
    throw InputError("basis does not match the problem dimensions");
  }
  head_ = basis.head;
  state_ = basis.state;
  row_of_.assign(total, -1);
  for (int i = 0; i < m_; ++i) row_of_[head_[i]] = i;
  for (int j = 0; j < total; ++j) {
    if (state_[j] != kBasic) place_nonbasic(j);
  }
  if (!refactor()) {
    reset_to_slack_basis();
    return;
  }
  recompute_basic_values();
}

bool SimplexSolver::refactor() {
  etas_.clear();
  if (m_ == 0) return true;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int i = 0; i < m_; ++i) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, head_[i]); it; ++it) {
      triplets.emplace_back(static_cast<int>(it.row()), i, it.value());
    }
  }
  Eigen::SparseMatrix<double> basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  lu_ = std::make_unique<Lu>();
  lu_->analyzePattern(basis);
  lu_->factorize(basis);
  return lu_->info() == Eigen::Success;
}

Eigen::VectorXd SimplexSolver::ftran(const Eigen::VectorXd& v) const {
  Eigen::VectorXd w = lu_->solve(v);
  for (const auto& [r, eta] : etas_) {
    const double wr = w(r);
    if (wr == 0.0) continue;
    w += wr * eta;
    w(r) = wr * eta(r);
  }
  return w;
}

Eigen::VectorXd SimplexSolver::btran(const Eigen::VectorXd& v) const {
  Eigen::VectorXd w = v;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    const auto& [r, eta] = *it;
    w(r) = w.dot(eta);
  }
  return lu_->transpose().solve(w);
}

double SimplexSolver::column_dot(const Eigen::VectorXd& y, int j) const {
  double s = 0.0;
  for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) s += y(it.row()) * it.value();
  return s;
}

void SimplexSolver::recompute_basic_values() {
  if (m_ == 0) return;
  Eigen::VectorXd r = rhs_;
  for (int j = 0; j < n_ + m_; ++j) {
    if (state_[j] == kBasic || x_[j] == 0.0) continue;
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, j); it; ++it) {
      r(it.row()) -= it.value() * x_[j];
    }
  }
  const Eigen::VectorXd xb = ftran(r);
  for (int i = 0; i < m_; ++i) x_[head_[i]] = xb(i);
}

bool SimplexSolver::basic_infeasible(int row, double& violation) const {
  const int j = head_[row];
  const double tol = opt_.feasibility_tol;
  if (x_[j] < lb_[j] - tol) {
    violation = x_[j] - lb_[j];
    return true;
  }
  if (x_[j] > ub_[j] + tol) {
    violation = x_[j] - ub_[j];
    return true;
  }
  violation = 0.0;
  return false;
}

LpSolution SimplexSolver::solve() {
  const int total = n_ + m_;
  const long max_iter = opt_.max_iterations > 0 ? opt_.max_iterations : 50L * total + 10000;
  const double ftol = opt_.feasibility_tol;
  const double otol = opt_.optimality_tol;

  LpSolution sol;
  long iter = 0;
  int degenerate_run = 0;
  bool bland = false;
  int since_refactor = static_cast<int>(etas_.size());
  bool verified = false;  // optimality confirmed right after a refactor

  // Progress is measured on the phase objective; steps that do not improve
  // it count towards the stall limit whatever their length.
  double best_phase1 = kInf, best_phase2 = kInf;

  // Bound perturbation against stalling: relaxed bounds of degenerate basic
  // variables, undone before the final answer.
  bool perturbed = false;
  int perturb_rounds = 0;
  std::vector<double> saved_lb, saved_ub;
  std::uint64_t lcg = 0x9E3779B97F4A7C15ULL;
  auto next_unit = [&lcg] {
    lcg = lcg * 6364136223846793005ULL + 1442695040888963407ULL;
    return static_cast<double>(lcg >> 11) * 0x1.0p-53;
  };
  std::vector<char> rejected(static_cast<std::size_t>(total), 0);

  auto refresh = [&] {
    if (!refactor()) reset_to_slack_basis();
    recompute_basic_values();
    since_refactor = 0;
  };
  auto perturb = [&] {
    if (!perturbed) {
      saved_lb = lb_;
      saved_ub = ub_;
      perturbed = true;
    }
    ++perturb_rounds;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      const double scale = opt_.perturbation;
      if (std::isfinite(lb_[j]) && x_[j] - lb_[j] < scale * (1.0 + std::abs(lb_[j]))) {
        lb_[j] -= (1.0 + next_unit()) * scale * (1.0 + std::abs(lb_[j]));
      }
      if (std::isfinite(ub_[j]) && ub_[j] - x_[j] < scale * (1.0 + std::abs(ub_[j]))) {
        ub_[j] += (1.0 + next_unit()) * scale * (1.0 + std::abs(ub_[j]));
      }
    }
  };
  auto unperturb = [&] {
    lb_ = saved_lb;
    ub_ = saved_ub;
    perturbed = false;
    best_phase1 = best_phase2 = kInf;
    for (int j = 0; j < total; ++j) {
      if (state_[j] != kBasic) place_nonbasic(j);
    }
    refresh();
  };

  Eigen::VectorXd cb(m_), y(m_);
  for (;;) {
    if (iter >= max_iter) {
      if (perturbed) unperturb();
      sol.status = LpStatus::iteration_limit;
      break;
    }
    // Phase selection: phase 1 minimises the sum of basic bound violations.
    bool phase1 = false;
    for (int i = 0; i < m_; ++i) {
      double v;
      if (basic_infeasible(i, v)) {
        cb(i) = v < 0.0 ? -1.0 : 1.0;
        phase1 = true;
      } else {
        cb(i) = 0.0;
      }
    }
    if (!phase1) {
      for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
    }
    y = m_ > 0 ? btran(cb) : Eigen::VectorXd();

    // Pricing: Dantzig, or the lowest eligible index under Bland's rule.
    int enter = -1;
    int dir = 0;
    double best = 0.0;
    for (int j = 0; j < total; ++j) {
      const auto s = state_[j];
      if (s == kBasic || lb_[j] == ub_[j] || rejected[static_cast<std::size_t>(j)]) continue;
      const double d = (phase1 ? 0.0 : cost_[j]) - (m_ > 0 ? column_dot(y, j) : 0.0);
      int cand_dir = 0;
      if ((s == kAtLower || s == kFree) && d < -otol) cand_dir = 1;
      if ((s == kAtUpper || s == kFree) && d > otol) cand_dir = -1;
      if (cand_dir == 0) continue;
      if (bland) {
        enter = j;
        dir = cand_dir;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        enter = j;
        dir = cand_dir;
      }
    }

    if (enter < 0) {
      if (!verified && since_refactor > 0) {
        // Confirm on a fresh factorization before declaring the result.
        refresh();
        verified = true;
        continue;
      }
      if (perturbed) {
        unperturb();
        verified = false;
        bland = false;
        degenerate_run = 0;
        std::fill(rejected.begin(), rejected.end(), 0);
        continue;
      }
      sol.status = phase1 ? LpStatus::infeasible : LpStatus::optimal;
      break;
    }
    verified = false;
    ++iter;

    Eigen::VectorXd col = Eigen::VectorXd::Zero(m_);
    for (Eigen::SparseMatrix<double>::InnerIterator it(a_, enter); it; ++it) {
      col(it.row()) = it.value();
    }
    const Eigen::VectorXd alpha = ftran(col);

    // Ratio test. rate is d x_B(i) / d theta.
    auto breakpoint = [&](int i, double relax, double ptol, double& theta, double& bound) -> bool {
      const double a = alpha(i);
      if (std::abs(a) <= ptol) return false;
      const double rate = -dir * a;
      const int j = head_[i];
      const double v = x_[j];
      if (phase1 && v < lb_[j] - ftol) {
        if (rate <= 0.0) return false;
        bound = lb_[j];
        theta = (lb_[j] + relax - v) / rate;
        return true;
      }
      if (phase1 && v > ub_[j] + ftol) {
        if (rate >= 0.0) return false;
        bound = ub_[j];
        theta = (ub_[j] - relax - v) / rate;
        return true;
      }
      if (rate < 0.0 && std::isfinite(lb_[j])) {
        bound = lb_[j];
        theta = (v - lb_[j] + relax) / -rate;
        return true;
      }
      if (rate > 0.0 && std::isfinite(ub_[j])) {
        bound = ub_[j];
        theta = (ub_[j] + relax - v) / rate;
        return true;
      }
      return false;
    };

    int leave = -1;
    double leave_bound = 0.0;
    double theta = kInf;
    auto ratio_test = [&](double ptol) {
      leave = -1;
      theta = kInf;
      if (bland) {
        int leave_var = -1;
        for (int i = 0; i < m_; ++i) {
          double t, b;
          if (!breakpoint(i, 0.0, ptol, t, b)) continue;
          t = std::max(t, 0.0);
          if (t < theta - 1e-15 || (t <= theta + 1e-15 && head_[i] < leave_var)) {
            theta = t;
            leave = i;
            leave_bound = b;
            leave_var = head_[i];
          }
        }
        return;
      }
      // Harris two-pass test: bound the step with relaxed bounds, then take
      // the largest pivot among rows that block within it.
      double theta_max = kInf;
      for (int i = 0; i < m_; ++i) {
        double t, b;
        if (breakpoint(i, 0.5 * ftol, ptol, t, b)) theta_max = std::min(theta_max, std::max(t, 0.0));
      }
      if (!std::isfinite(theta_max)) return;
      double best_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        double t, b;
        if (!breakpoint(i, 0.0, ptol, t, b)) continue;
        if (std::max(t, 0.0) <= theta_max && std::abs(alpha(i)) > best_pivot) {
          best_pivot = std::abs(alpha(i));
          leave = i;
          leave_bound = b;
          theta = std::max(t, 0.0);
        }
      }
    };
    ratio_test(opt_.pivot_tol);

    const double flip = (std::isfinite(lb_[enter]) && std::isfinite(ub_[enter]))
                            ? ub_[enter] - lb_[enter]
                            : kInf;
    if (leave < 0 && !std::isfinite(flip)) {
      if (since_refactor > 0) {
        refresh();
        continue;
      }
      ratio_test(opt_.pivot_tol * 1e-4);
      if (leave < 0) {
        if (phase1) {
          // A phase-1 direction always has a blocking row in exact
          // arithmetic; skip the column until the next successful pivot.
          rejected[static_cast<std::size_t>(enter)] = 1;
          continue;
        }
        if (perturbed) {
          unperturb();
          continue;
        }
        sol.status = LpStatus::unbounded;
        break;
      }
    }

    if (flip <= theta) {
      // Bound flip of the entering variable, basis unchanged.
      for (int i = 0; i < m_; ++i) x_[head_[i]] += -dir * alpha(i) * flip;
      state_[enter] = dir > 0 ? kAtUpper : kAtLower;
      x_[enter] = dir > 0 ? ub_[enter] : lb_[enter];
      degenerate_run = 0;
      std::fill(rejected.begin(), rejected.end(), 0);
      continue;
    }

    for (int i = 0; i < m_; ++i) x_[head_[i]] += -dir * alpha(i) * theta;
    x_[enter] += dir * theta;

    const int out = head_[leave];
    x_[out] = leave_bound;
    state_[out] = (leave_bound == lb_[out]) ? kAtLower : kAtUpper;
    row_of_[out] = -1;
    head_[leave] = enter;
    row_of_[enter] = leave;
    state_[enter] = kBasic;
    std::fill(rejected.begin(), rejected.end(), 0);

    Eigen::VectorXd eta = -alpha / alpha(leave);
    eta(leave) = 1.0 / alpha(leave);
    etas_.emplace_back(leave, std::move(eta));
    if (++since_refactor >= opt_.refactor_interval) refresh();

    double progress_obj = 0.0;
    if (phase1) {
      for (int i = 0; i < m_; ++i) {
        double v;
        if (basic_infeasible(i, v)) progress_obj += std::abs(v);
      }
    } else {
      for (int j = 0; j < n_; ++j) progress_obj += cost_[j] * x_[j];
    }
    double& best_obj = phase1 ? best_phase1 : best_phase2;
    const bool improved = progress_obj < best_obj - 1e-11 * (1.0 + std::abs(progress_obj));
    if (improved) best_obj = progress_obj;
    if (!improved) {
      if (++degenerate_run > opt_.degenerate_limit) {
        if (perturb_rounds < opt_.max_perturbations) {
          perturb();
          degenerate_run = 0;
        } else {
          bland = true;
        }
      }
    } else {
      degenerate_run = 0;
      bland = false;
    }
  }

  sol.iterations = iter;
  sol.values.assign(x_.begin(), x_.begin() + n_);
  sol.objective = 0.0;
  for (int j = 0; j < n_; ++j) sol.objective += cost_[j] * x_[j];
  if (sol.status == LpStatus::optimal) {
    for (int i = 0; i < m_; ++i) cb(i) = cost_[head_[i]];
    y = m_ > 0 ? btran(cb) : Eigen::VectorXd();
    sol.duals.assign(y.data(), y.data() + m_);
    sol.reduced_costs.resize(n_);
    for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = cost_[j] - (m_ > 0 ? column_dot(y, j) : 0.0);
  }
  return sol;
}

LpSolution solve_lp(const MilpProblem& problem, const LpOptions& options) {
  SimplexSolver solver(problem, options);
  return solver.solve();
}

}  // namespace fairrepair
