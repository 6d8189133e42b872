#include "fairrepair/milp.hpp"

#include "fairrepair/errors.hpp"

#include <algorithm>
#include <cmath>

namespace fairrepair {

int MilpProblem::add_variable(std::string name, VarType type, double lower, double upper,
                              std::string role) {
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) {
    throw StructureError("variable '" + name + "' has invalid bounds");
  }
  if (index_.count(name)) throw StructureError("duplicate variable name '" + name + "'");
  const int id = static_cast<int>(vars_.size());
  index_.emplace(name, id);
  vars_.push_back({std::move(name), type, lower, upper, std::move(role)});
  return id;
}

int MilpProblem::add_constraint(std::string name, std::vector<Term> terms, Sense sense,
                                double rhs) {
  if (!std::isfinite(rhs)) throw StructureError("constraint '" + name + "' has non-finite rhs");
  for (const auto& t : terms) {
    if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size()) {
      throw StructureError("constraint '" + name + "' references an undeclared variable");
    }
  }
  // Merge duplicate references to the same variable.
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> merged;
  for (const auto& t : terms) {
    if (!merged.empty() && merged.back().var == t.var) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const Term& t) { return t.coeff == 0.0; });
  cons_.push_back({std::move(name), std::move(merged), sense, rhs});
  return static_cast<int>(cons_.size()) - 1;
}

void MilpProblem::set_objective(std::vector<Term> terms) {
  for (const auto& t : terms) {
    if (t.var < 0 || static_cast<std::size_t>(t.var) >= vars_.size()) {
      throw StructureError("objective references an undeclared variable");
    }
  }
  objective_ = std::move(terms);
}

std::optional<int> MilpProblem::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> MilpProblem::variables_with_role(const std::string& role) const {
  std::vector<int> ids;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].role == role) ids.push_back(static_cast<int>(j));
  }
  return ids;
}

std::vector<int> MilpProblem::binaries() const {
  std::vector<int> ids;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    if (vars_[j].type == VarType::binary) ids.push_back(static_cast<int>(j));
  }
  return ids;
}

void MilpProblem::validate() const {
  const auto n = static_cast<int>(vars_.size());
  for (const auto& v : vars_) {
    if (v.type == VarType::binary && (v.lower < 0.0 || v.upper > 1.0)) {
      throw StructureError("binary variable '" + v.name + "' must have bounds within [0,1]");
    }
  }
  for (const auto& c : cons_) {
    for (const auto& t : c.terms) {
      if (t.var < 0 || t.var >= n || !std::isfinite(t.coeff)) {
        throw StructureError("constraint '" + c.name + "' has an invalid term");
      }
    }
  }
  for (const auto& t : objective_) {
    if (t.var < 0 || t.var >= n || !std::isfinite(t.coeff)) {
      throw StructureError("objective has an invalid term");
    }
  }
}

double MilpProblem::objective_value(std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : objective_) v += t.coeff * x[static_cast<std::size_t>(t.var)];
  return v;
}

double MilpProblem::activity(const Constraint& c, std::span<const double> x) const {
  double v = 0.0;
  for (const auto& t : c.terms) v += t.coeff * x[static_cast<std::size_t>(t.var)];
  return v;
}

double MilpProblem::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < vars_.size(); ++j) {
    worst = std::max({worst, vars_[j].lower - x[j], x[j] - vars_[j].upper});
  }
  for (const auto& c : cons_) {
    const double a = activity(c, x);
    switch (c.sense) {
      case Sense::le: worst = std::max(worst, a - c.rhs); break;
      case Sense::ge: worst = std::max(worst, c.rhs - a); break;
      case Sense::eq: worst = std::max(worst, std::abs(a - c.rhs)); break;
    }
  }
  return worst;
}

}  // namespace fairrepair
