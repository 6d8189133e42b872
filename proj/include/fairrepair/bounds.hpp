#pragma once

#include "fairrepair/model.hpp"
#include "fairrepair/schema.hpp"

#include <vector>

namespace fairrepair {

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
};

struct IntervalVector {
  Vector lower;
  Vector upper;

  // ||upper - lower||_1
  double width_l1() const { return (upper - lower).lpNorm<1>(); }
};

struct LayerBounds {
  IntervalVector pre;   // affine output
  IntervalVector post;  // after ReLU
};

// Interval bounds for every layer of a feature extractor over a box.
struct ConcreteBounds {
  std::vector<LayerBounds> layers;
  IntervalVector features;  // equals layers.back().post, or the box if empty
};

// lower_coeff * x + lower_const <= h <= upper_coeff * x + upper_const
// for every x in the box the bounds were computed over.
struct SymbolicBounds {
  Matrix lower_coeff;  // d x m
  Vector lower_const;  // d
  Matrix upper_coeff;
  Vector upper_const;
  // Interval bounds on h over the same box; empty when unknown. Consumers
  // intersect with them, so symbolic results are never looser.
  IntervalVector features;
};

// Lower linear relaxation of unstable ReLUs. `zero` is y >= 0; `adaptive`
// picks y >= z when u > -l (the CROWN heuristic).
enum class ReluLowerSlope { zero, adaptive };

// Unstable iff l < -kUnstableThreshold and u > kUnstableThreshold.
inline constexpr double kUnstableThreshold = 1e-12;

// Interval image of x -> W x + b for x in [lower, upper].
IntervalVector affine_interval(const AffineLayer& layer, const Vector& lower,
                               const Vector& upper);

ConcreteBounds ibp_concrete(const FeatureExtractor& prefix, const Box& box);

// Backward substitution to the input; intermediate pre-activation bounds
// come from ibp_concrete.
SymbolicBounds symbolic_bounds(const FeatureExtractor& prefix, const Box& box,
                               ReluLowerSlope slope = ReluLowerSlope::zero);
SymbolicBounds symbolic_bounds(const FeatureExtractor& prefix, const Box& box,
                               const ConcreteBounds& concrete,
                               ReluLowerSlope slope = ReluLowerSlope::zero);

// Interval evaluation of the symbolic bounds over the box.
IntervalVector concretize(const SymbolicBounds& sb, const Box& box);

// Output range of `final` over the features, computed either from the
// feature box (IBP) or jointly from the symbolic forms (tighter).
Interval output_interval(const AffineLayer& final, const IntervalVector& features);
Interval symbolic_output_interval(const AffineLayer& final, const SymbolicBounds& sb,
                                  const Box& box);

}  // namespace fairrepair
