#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace fairrepair {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarType { continuous, binary };
enum class Sense { le, eq, ge };

struct Variable {
  std::string name;
  VarType type = VarType::continuous;
  double lower = 0.0;
  double upper = kInf;
  // Stable role tag (e.g. "delta_w", "lambda"); see encode.hpp.
  std::string role;
};

struct Term {
  int var = 0;
  double coeff = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::le;
  double rhs = 0.0;
};

// A minimisation problem with continuous and binary variables and linear
// constraints.
class MilpProblem {
 public:
  int add_variable(std::string name, VarType type, double lower, double upper,
                   std::string role = {});
  int add_continuous(std::string name, double lower, double upper, std::string role = {}) {
    return add_variable(std::move(name), VarType::continuous, lower, upper, std::move(role));
  }
  int add_binary(std::string name, std::string role = {}) {
    return add_variable(std::move(name), VarType::binary, 0.0, 1.0, std::move(role));
  }
  int add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);
  void set_objective(std::vector<Term> terms);

  std::size_t num_variables() const { return vars_.size(); }
  std::size_t num_constraints() const { return cons_.size(); }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return cons_; }
  const std::vector<Term>& objective() const { return objective_; }
  const Variable& variable(int id) const { return vars_.at(static_cast<std::size_t>(id)); }

  std::optional<int> find(const std::string& name) const;
  std::vector<int> variables_with_role(const std::string& role) const;
  std::vector<int> binaries() const;

  // Throws StructureError on dangling references or malformed binaries.
  void validate() const;

  double objective_value(std::span<const double> x) const;
  double activity(const Constraint& c, std::span<const double> x) const;
  // Largest bound or constraint violation of x (0 when feasible).
  double max_violation(std::span<const double> x) const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> cons_;
  std::vector<Term> objective_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace fairrepair
