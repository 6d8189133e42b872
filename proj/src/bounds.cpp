#include "fairrepair/bounds.hpp"

#include "fairrepair/errors.hpp"

#include <algorithm>

namespace fairrepair {

namespace {

void check_box(const FeatureExtractor& prefix, const Box& box) {
  if (box.dim() != prefix.input_dim()) {
    throw InputError("box has " + std::to_string(box.dim()) + " dimensions, network expects " +
                     std::to_string(prefix.input_dim()));
  }
}

// Linear relaxation y in [sl*z + tl, su*z + tu] of y = ReLU(z), z in [l,u].
struct Relaxation {
  Vector lower_slope, lower_icpt, upper_slope, upper_icpt;
};

Relaxation relax(const IntervalVector& pre, ReluLowerSlope slope) {
  const auto n = pre.lower.size();
  Relaxation r{Vector::Zero(n), Vector::Zero(n), Vector::Zero(n), Vector::Zero(n)};
  for (Eigen::Index j = 0; j < n; ++j) {
    const double l = pre.lower(j);
    const double u = pre.upper(j);
    if (l < -kUnstableThreshold && u > kUnstableThreshold) {
      const double s = u / (u - l);
      r.upper_slope(j) = s;
      r.upper_icpt(j) = -s * l;
      r.lower_slope(j) = (slope == ReluLowerSlope::adaptive && u > -l) ? 1.0 : 0.0;
    } else if (u <= kUnstableThreshold && l < -kUnstableThreshold) {
      // inactive: stays zero
    } else if (l >= -kUnstableThreshold && u > kUnstableThreshold) {
      r.upper_slope(j) = 1.0;
      r.lower_slope(j) = 1.0;
    }
    // Otherwise both endpoints are within the threshold of zero: the output
    // is treated as zero.
  }
  return r;
}

// Propagates the linear form `coeff * a_k + constant` (a_k the post-activation
// of layer k) back to the input, choosing the relaxation side per sign.
void substitute(const std::vector<AffineLayer>& layers, const std::vector<Relaxation>& relax,
                std::size_t k_top, bool upper, Matrix& coeff, Vector& constant) {
  for (std::size_t k = k_top + 1; k-- > 0;) {
    const auto& rel = relax[k];
    for (Eigen::Index r = 0; r < coeff.rows(); ++r) {
      for (Eigen::Index j = 0; j < coeff.cols(); ++j) {
        const double c = coeff(r, j);
        if (c == 0.0) continue;
        const bool use_upper = (c > 0.0) == upper;
        const double s = use_upper ? rel.upper_slope(j) : rel.lower_slope(j);
        const double t = use_upper ? rel.upper_icpt(j) : rel.lower_icpt(j);
        constant(r) += c * t;
        coeff(r, j) = c * s;
      }
    }
    constant += coeff * layers[k].bias;
    coeff = coeff * layers[k].weight;
  }
}

}  // namespace

IntervalVector affine_interval(const AffineLayer& layer, const Vector& lower,
                               const Vector& upper) {
  const Matrix pos = layer.weight.cwiseMax(0.0);
  const Matrix neg = layer.weight.cwiseMin(0.0);
  return {layer.bias + pos * lower + neg * upper, layer.bias + pos * upper + neg * lower};
}

ConcreteBounds ibp_concrete(const FeatureExtractor& prefix, const Box& box) {
  check_box(prefix, box);
  ConcreteBounds out;
  Vector lo = box.lower;
  Vector hi = box.upper;
  for (const auto& layer : prefix.layers()) {
    LayerBounds lb;
    lb.pre = affine_interval(layer, lo, hi);
    lb.post = {lb.pre.lower.cwiseMax(0.0), lb.pre.upper.cwiseMax(0.0)};
    lo = lb.post.lower;
    hi = lb.post.upper;
    out.layers.push_back(std::move(lb));
  }
  out.features = {lo, hi};
  return out;
}

SymbolicBounds symbolic_bounds(const FeatureExtractor& prefix, const Box& box,
                               ReluLowerSlope slope) {
  return symbolic_bounds(prefix, box, ibp_concrete(prefix, box), slope);
}

SymbolicBounds symbolic_bounds(const FeatureExtractor& prefix, const Box& box,
                               const ConcreteBounds& concrete, ReluLowerSlope slope) {
  check_box(prefix, box);
  const auto& layers = prefix.layers();
  const auto d = prefix.output_dim();
  const auto m = prefix.input_dim();
  if (layers.empty()) {
    // Identity extractor: h = x.
    return {Matrix::Identity(d, m), Vector::Zero(d), Matrix::Identity(d, m), Vector::Zero(d),
            concrete.features};
  }
  std::vector<Relaxation> relaxations;
  relaxations.reserve(layers.size());
  for (const auto& lb : concrete.layers) relaxations.push_back(relax(lb.pre, slope));

  SymbolicBounds sb;
  sb.lower_coeff = Matrix::Identity(d, d);
  sb.lower_const = Vector::Zero(d);
  substitute(layers, relaxations, layers.size() - 1, false, sb.lower_coeff, sb.lower_const);
  sb.upper_coeff = Matrix::Identity(d, d);
  sb.upper_const = Vector::Zero(d);
  substitute(layers, relaxations, layers.size() - 1, true, sb.upper_coeff, sb.upper_const);
  sb.features = concrete.features;
  return sb;
}

IntervalVector concretize(const SymbolicBounds& sb, const Box& box) {
  if (sb.lower_coeff.cols() != box.dim() || sb.upper_coeff.cols() != box.dim()) {
    throw InputError("symbolic bounds and box have different input widths");
  }
  const Matrix lpos = sb.lower_coeff.cwiseMax(0.0), lneg = sb.lower_coeff.cwiseMin(0.0);
  const Matrix upos = sb.upper_coeff.cwiseMax(0.0), uneg = sb.upper_coeff.cwiseMin(0.0);
  IntervalVector out{sb.lower_const + lpos * box.lower + lneg * box.upper,
                     sb.upper_const + upos * box.upper + uneg * box.lower};
  if (sb.features.lower.size() == out.lower.size()) {
    out.lower = out.lower.cwiseMax(sb.features.lower);
    out.upper = out.upper.cwiseMin(sb.features.upper);
  }
  return out;
}

Interval output_interval(const AffineLayer& final, const IntervalVector& features) {
  auto iv = affine_interval(final, features.lower, features.upper);
  return {iv.lower(0), iv.upper(0)};
}

Interval symbolic_output_interval(const AffineLayer& final, const SymbolicBounds& sb,
                                  const Box& box) {
  const Eigen::RowVectorXd w = final.weight.row(0);
  const auto m = box.dim();
  Eigen::RowVectorXd lo_coeff = Eigen::RowVectorXd::Zero(m), hi_coeff = lo_coeff;
  double lo_const = final.bias(0), hi_const = final.bias(0);
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    if (w(j) >= 0.0) {
      lo_coeff += w(j) * sb.lower_coeff.row(j);
      lo_const += w(j) * sb.lower_const(j);
      hi_coeff += w(j) * sb.upper_coeff.row(j);
      hi_const += w(j) * sb.upper_const(j);
    } else {
      lo_coeff += w(j) * sb.upper_coeff.row(j);
      lo_const += w(j) * sb.upper_const(j);
      hi_coeff += w(j) * sb.lower_coeff.row(j);
      hi_const += w(j) * sb.lower_const(j);
    }
  }
  double lo = lo_const, hi = hi_const;
  for (Eigen::Index k = 0; k < m; ++k) {
    lo += std::min(lo_coeff(k) * box.lower(k), lo_coeff(k) * box.upper(k));
    hi += std::max(hi_coeff(k) * box.lower(k), hi_coeff(k) * box.upper(k));
  }
  if (sb.features.lower.size() == w.size()) {
    const Interval ibp = output_interval(final, sb.features);
    lo = std::max(lo, ibp.lower);
    hi = std::min(hi, ibp.upper);
  }
  return {lo, hi};
}

}  // namespace fairrepair
