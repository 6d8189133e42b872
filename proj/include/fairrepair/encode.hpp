#pragma once

#include "fairrepair/bounds.hpp"
#include "fairrepair/branch_and_bound.hpp"
#include "fairrepair/milp.hpp"
#include "fairrepair/model.hpp"

#include <vector>

namespace fairrepair {

struct EncodeConfig {
  // Per-coordinate box on delta_w and delta_b.
  double delta_max = 10.0;
  // Replaces the strict "< 0": UB <= -margin, and symmetrically LB >= margin.
  double margin = 1e-6;
  double m_floor = 1e4;
  double m_slack = 0.1;
  // Multiplier applied on top of the computed M (doubled on each retry).
  double m_scale = 1.0;
};

double strict_margin(const EncodeConfig& cfg);

// Big-M for the Z disjunction: an upper bound on |b + db + (W + dW) h| over
// the delta box and every feature box, times (1 + m_slack) and m_scale,
// never below m_floor.
double big_m(const EncodeConfig& cfg, const AffineLayer& final,
             const std::vector<IntervalVector>& features);

// Dual data of the feature polytope of one input. Rows of A p <= D with
// p = (h, x):
//   -h + a_lo x <= -b_lo      (h >= a_lo x + b_lo)
//    h - a_hi x <=  b_hi
//   -x          <= -lower
//    x          <=  upper
// and, when the bounds carry interval feature bounds,
//   -h          <= -h_lower
//    h          <=  h_upper
struct DualData {
  Matrix a;  // (2d + 2m [+ 2d]) x (d + m)
  Vector d;
};

DualData dual_data(const SymbolicBounds& sb, const Box& box);

// Variable names and role tags used by both encodings:
//   dW_j   delta_w     db      delta_b
//   t_j    t           s       s
//   Z_i    z
//   P_i_j  P           Q_i_j   Q        LB_i  LB     UB_i  UB       (naive)
//   lambda_i_k lambda  eta_i_k eta      LBhat_i LBhat UBhat_i UBhat (symbolic)
// Indices are zero-based. The objective is sum_j t_j + s.
MilpProblem build_naive(const std::vector<IntervalVector>& features, const AffineLayer& final,
                        const EncodeConfig& cfg = {});
MilpProblem build_symbolic(const std::vector<SymbolicBounds>& bounds,
                           const std::vector<Box>& boxes, const AffineLayer& final,
                           const EncodeConfig& cfg = {});

// Reads dW and db from a solution of either encoding.
FinalLayerDelta extract_delta(const MilpProblem& problem, const std::vector<double>& values);

}  // namespace fairrepair
