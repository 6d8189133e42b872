#include "fairrepair/encode.hpp"

#include "fairrepair/errors.hpp"

#include <cmath>
#include <string>

namespace fairrepair {

namespace {

std::string idx(const std::string& base, std::size_t i) { return base + "_" + std::to_string(i); }
std::string idx(const std::string& base, std::size_t i, Eigen::Index j) {
  return base + "_" + std::to_string(i) + "_" + std::to_string(j);
}

void check_final(const AffineLayer& final) {
  if (final.output_dim() != 1) throw StructureError("final layer must have a single output");
}

// Shared part of both encodings: delta variables, L1 surrogates, objective.
struct DeltaVars {
  std::vector<int> dw;
  int db = 0;
};

DeltaVars add_delta_block(MilpProblem& p, Eigen::Index d, const EncodeConfig& cfg) {
  DeltaVars v;
  const double lim = cfg.delta_max;
  std::vector<int> t;
  for (Eigen::Index j = 0; j < d; ++j) {
    v.dw.push_back(p.add_continuous("dW_" + std::to_string(j), -lim, lim, "delta_w"));
  }
  v.db = p.add_continuous("db", -lim, lim, "delta_b");
  for (Eigen::Index j = 0; j < d; ++j) {
    t.push_back(p.add_continuous("t_" + std::to_string(j), 0.0, kInf, "t"));
  }
  const int s = p.add_continuous("s", 0.0, kInf, "s");
  for (Eigen::Index j = 0; j < d; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    p.add_constraint(idx("t_pos", jj), {{t[jj], 1.0}, {v.dw[jj], -1.0}}, Sense::ge, 0.0);
    p.add_constraint(idx("t_neg", jj), {{t[jj], 1.0}, {v.dw[jj], 1.0}}, Sense::ge, 0.0);
  }
  p.add_constraint("s_pos", {{s, 1.0}, {v.db, -1.0}}, Sense::ge, 0.0);
  p.add_constraint("s_neg", {{s, 1.0}, {v.db, 1.0}}, Sense::ge, 0.0);
  std::vector<Term> obj;
  for (int id : t) obj.push_back({id, 1.0});
  obj.push_back({s, 1.0});
  p.set_objective(std::move(obj));
  return v;
}

// LB >= margin - M (1 - Z) and UB <= M Z - margin.
void add_disjunction(MilpProblem& p, std::size_t i, int lb, int ub, int z, double m,
                     double margin) {
  p.add_constraint(idx("fair_pos", i), {{lb, 1.0}, {z, -m}}, Sense::ge, margin - m);
  p.add_constraint(idx("fair_neg", i), {{ub, 1.0}, {z, -m}}, Sense::le, -margin);
}

}  // namespace

double strict_margin(const EncodeConfig& cfg) {
  if (!(cfg.margin > 0.0) || !std::isfinite(cfg.margin)) {
    throw ConfigError("strict margin must be a positive finite number");
  }
  return cfg.margin;
}

double big_m(const EncodeConfig& cfg, const AffineLayer& final,
             const std::vector<IntervalVector>& features) {
  if (!std::isfinite(cfg.delta_max) || cfg.delta_max < 0.0) {
    throw ConfigError("the delta box must be finite; set a finite delta_max");
  }
  if (!(cfg.m_scale > 0.0) || cfg.m_slack < 0.0 || !(cfg.m_floor > 0.0)) {
    throw ConfigError("big-M scale, slack and floor must be positive");
  }
  check_final(final);
  double worst = 0.0;
  for (const auto& f : features) {
    if (f.lower.size() != final.input_dim() || f.upper.size() != final.input_dim()) {
      throw StructureError("feature bounds do not match the final layer width");
    }
    double total = std::abs(final.bias(0)) + cfg.delta_max;
    for (Eigen::Index j = 0; j < final.input_dim(); ++j) {
      const double mag = std::max(std::abs(f.lower(j)), std::abs(f.upper(j)));
      total += (std::abs(final.weight(0, j)) + cfg.delta_max) * mag;
    }
    worst = std::max(worst, total);
  }
  if (!std::isfinite(worst)) throw NumericalError("big-M is not finite; feature bounds overflow");
  return std::max(cfg.m_floor, worst * (1.0 + cfg.m_slack)) * cfg.m_scale;
}

DualData dual_data(const SymbolicBounds& sb, const Box& box) {
  const auto d = sb.lower_coeff.rows();
  const auto m = box.dim();
  if (sb.lower_coeff.cols() != m || sb.upper_coeff.cols() != m || sb.upper_coeff.rows() != d ||
      sb.lower_const.size() != d || sb.upper_const.size() != d) {
    throw StructureError("symbolic bounds and box have inconsistent shapes");
  }
  const bool boxed = sb.features.lower.size() == d && sb.features.upper.size() == d;
  const auto rows = 2 * d + 2 * m + (boxed ? 2 * d : 0);
  DualData out{Matrix::Zero(rows, d + m), Vector::Zero(rows)};
  auto& a = out.a;
  a.block(0, 0, d, d) = -Matrix::Identity(d, d);
  a.block(0, d, d, m) = sb.lower_coeff;
  a.block(d, 0, d, d) = Matrix::Identity(d, d);
  a.block(d, d, d, m) = -sb.upper_coeff;
  a.block(2 * d, d, m, m) = -Matrix::Identity(m, m);
  a.block(2 * d + m, d, m, m) = Matrix::Identity(m, m);
  out.d.head(2 * d + 2 * m) << -sb.lower_const, sb.upper_const, -box.lower, box.upper;
  if (boxed) {
    const auto r = 2 * d + 2 * m;
    a.block(r, 0, d, d) = -Matrix::Identity(d, d);
    a.block(r + d, 0, d, d) = Matrix::Identity(d, d);
    out.d.segment(r, d) = -sb.features.lower;
    out.d.segment(r + d, d) = sb.features.upper;
  }
  return out;
}

MilpProblem build_naive(const std::vector<IntervalVector>& features, const AffineLayer& final,
                        const EncodeConfig& cfg) {
  if (features.empty()) throw InputError("repair set is empty");
  check_final(final);
  const double margin = strict_margin(cfg);
  const double m = big_m(cfg, final, features);
  const auto d = final.input_dim();
  const double b = final.bias(0);

  MilpProblem p;
  const DeltaVars dv = add_delta_block(p, d, cfg);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    const int z = p.add_binary(idx("Z", i), "z");
    std::vector<Term> lb_sum{{dv.db, 1.0}}, ub_sum{{dv.db, 1.0}};
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      const double w = final.weight(0, j);
      const int pv = p.add_continuous(idx("P", i, j), -kInf, kInf, "P");
      const int qv = p.add_continuous(idx("Q", i, j), -kInf, kInf, "Q");
      // P <= (W + dW) h for both endpoints of h, Q >= likewise.
      for (const auto& [tag, h] : {std::pair{"lo", f.lower(j)}, std::pair{"hi", f.upper(j)}}) {
        p.add_constraint(idx(std::string("P") + tag, i, j), {{pv, 1.0}, {dv.dw[jj], -h}},
                         Sense::le, w * h);
        p.add_constraint(idx(std::string("Q") + tag, i, j), {{qv, 1.0}, {dv.dw[jj], -h}},
                         Sense::ge, w * h);
      }
      lb_sum.push_back({pv, 1.0});
      ub_sum.push_back({qv, 1.0});
    }
    const int lb = p.add_continuous(idx("LB", i), -kInf, kInf, "LB");
    const int ub = p.add_continuous(idx("UB", i), -kInf, kInf, "UB");
    lb_sum.push_back({lb, -1.0});
    ub_sum.push_back({ub, -1.0});
    p.add_constraint(idx("LB_def", i), std::move(lb_sum), Sense::eq, -b);
    p.add_constraint(idx("UB_def", i), std::move(ub_sum), Sense::eq, -b);
    add_disjunction(p, i, lb, ub, z, m, margin);
  }
  p.validate();
  return p;
}

MilpProblem build_symbolic(const std::vector<SymbolicBounds>& bounds,
                           const std::vector<Box>& boxes, const AffineLayer& final,
                           const EncodeConfig& cfg) {
  if (bounds.empty()) throw InputError("repair set is empty");
  if (bounds.size() != boxes.size()) {
    throw InputError("need exactly one box per set of symbolic bounds");
  }
  check_final(final);
  const auto d = final.input_dim();
  std::vector<IntervalVector> concrete;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    if (bounds[i].lower_coeff.rows() != d) {
      throw StructureError("symbolic bounds width " + std::to_string(bounds[i].lower_coeff.rows()) +
                           " does not match final layer input width " + std::to_string(d));
    }
    concrete.push_back(concretize(bounds[i], boxes[i]));
  }
  const double margin = strict_margin(cfg);
  const double m = big_m(cfg, final, concrete);
  const double b = final.bias(0);

  MilpProblem p;
  const DeltaVars dv = add_delta_block(p, d, cfg);
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    const DualData dd = dual_data(bounds[i], boxes[i]);
    const auto rows = dd.a.rows();
    const int z = p.add_binary(idx("Z", i), "z");
    std::vector<int> lam, eta;
    for (Eigen::Index k = 0; k < rows; ++k) {
      lam.push_back(p.add_continuous(idx("lambda", i, k), 0.0, kInf, "lambda"));
    }
    for (Eigen::Index k = 0; k < rows; ++k) {
      eta.push_back(p.add_continuous(idx("eta", i, k), 0.0, kInf, "eta"));
    }
    // A^T lambda = -C and A^T eta = C, with C = (W + dW, 0).
    for (Eigen::Index c = 0; c < dd.a.cols(); ++c) {
      std::vector<Term> lt, et;
      for (Eigen::Index k = 0; k < rows; ++k) {
        const double v = dd.a(k, c);
        if (v == 0.0) continue;
        lt.push_back({lam[static_cast<std::size_t>(k)], v});
        et.push_back({eta[static_cast<std::size_t>(k)], v});
      }
      double rhs = 0.0;
      if (c < d) {
        lt.push_back({dv.dw[static_cast<std::size_t>(c)], 1.0});
        et.push_back({dv.dw[static_cast<std::size_t>(c)], -1.0});
        rhs = final.weight(0, c);
      }
      p.add_constraint(idx("dual_lo", i, c), std::move(lt), Sense::eq, -rhs);
      p.add_constraint(idx("dual_hi", i, c), std::move(et), Sense::eq, rhs);
    }
    // LBhat = b + db - lambda^T D, UBhat = b + db + eta^T D.
    const int lb = p.add_continuous(idx("LBhat", i), -kInf, kInf, "LBhat");
    const int ub = p.add_continuous(idx("UBhat", i), -kInf, kInf, "UBhat");
    std::vector<Term> lt{{lb, 1.0}, {dv.db, -1.0}}, ut{{ub, 1.0}, {dv.db, -1.0}};
    for (Eigen::Index k = 0; k < rows; ++k) {
      lt.push_back({lam[static_cast<std::size_t>(k)], dd.d(k)});
      ut.push_back({eta[static_cast<std::size_t>(k)], -dd.d(k)});
    }
    p.add_constraint(idx("LBhat_def", i), std::move(lt), Sense::eq, b);
    p.add_constraint(idx("UBhat_def", i), std::move(ut), Sense::eq, b);
    add_disjunction(p, i, lb, ub, z, m, margin);
  }
  p.validate();
  return p;
}

FinalLayerDelta extract_delta(const MilpProblem& problem, const std::vector<double>& values) {
  if (values.size() != problem.num_variables()) {
    throw InputError("solution size does not match the problem");
  }
  const auto dw = problem.variables_with_role("delta_w");
  const auto db = problem.variables_with_role("delta_b");
  if (db.size() != 1) throw StructureError("problem has no unique delta_b variable");
  FinalLayerDelta out;
  out.delta_w.resize(static_cast<Eigen::Index>(dw.size()));
  for (std::size_t j = 0; j < dw.size(); ++j) {
    out.delta_w(static_cast<Eigen::Index>(j)) = values[static_cast<std::size_t>(dw[j])];
  }
  out.delta_b = values[static_cast<std::size_t>(db[0])];
  return out;
}

}  // namespace fairrepair
