#include "fairrepair/calibrate.hpp"

#include "fairrepair/errors.hpp"
#include "fairrepair/train.hpp"

#include <cmath>
#include <fstream>

#include "text_util.hpp"

namespace fairrepair {

namespace {

// Interval propagation with its reverse pass. Accumulates
// scale * d(||hbar - hlow||_1)/d(params) into grad and returns the width.
double width_with_gradient(const std::vector<AffineLayer>& layers, const Box& box,
                           std::vector<AffineLayer>* grad, double scale) {
  const std::size_t depth = layers.size();
  std::vector<Vector> lo(depth + 1), hi(depth + 1);    // post-activation, lo[0] = box
  std::vector<Vector> zlo(depth), zhi(depth);          // pre-activation
  lo[0] = box.lower;
  hi[0] = box.upper;
  for (std::size_t k = 0; k < depth; ++k) {
    const auto& W = layers[k].weight;
    const Matrix pos = W.cwiseMax(0.0), neg = W.cwiseMin(0.0);
    zlo[k] = layers[k].bias + pos * lo[k] + neg * hi[k];
    zhi[k] = layers[k].bias + pos * hi[k] + neg * lo[k];
    lo[k + 1] = zlo[k].cwiseMax(0.0);
    hi[k + 1] = zhi[k].cwiseMax(0.0);
  }
  const double width = (hi[depth] - lo[depth]).sum();
  if (grad == nullptr) return width;

  Vector g_lo = Vector::Constant(lo[depth].size(), -scale);
  Vector g_hi = Vector::Constant(hi[depth].size(), scale);
  for (std::size_t k = depth; k-- > 0;) {
    // ReLU: step derivative, 0 at the kink.
    const Vector g_zlo = g_lo.cwiseProduct((zlo[k].array() > 0.0).cast<double>().matrix());
    const Vector g_zhi = g_hi.cwiseProduct((zhi[k].array() > 0.0).cast<double>().matrix());
    const auto& W = layers[k].weight;
    auto& gW = (*grad)[k].weight;
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) {
        const double w = W(r, c);
        if (w > 0.0) {
          gW(r, c) += g_zlo(r) * lo[k](c) + g_zhi(r) * hi[k](c);
        } else if (w < 0.0) {
          gW(r, c) += g_zlo(r) * hi[k](c) + g_zhi(r) * lo[k](c);
        }
      }
    }
    (*grad)[k].bias += g_zlo + g_zhi;
    if (k == 0) break;
    const Matrix pos = W.cwiseMax(0.0), neg = W.cwiseMin(0.0);
    g_lo = pos.transpose() * g_zlo + neg.transpose() * g_zhi;
    g_hi = neg.transpose() * g_zlo + pos.transpose() * g_zhi;
  }
  return width;
}

double fair_loss_impl(const std::vector<AffineLayer>& prefix_layers, std::span<const Box> boxes,
                      std::span<const double> ori_diffs, double floor,
                      std::vector<AffineLayer>* grad, double weight) {
  if (boxes.size() != ori_diffs.size()) {
    throw InputError("need one original width per repair box");
  }
  if (boxes.empty()) return 0.0;
  const double n = static_cast<double>(boxes.size());
  double total = 0.0;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    if (ori_diffs[i] < floor) continue;
    const double scale = weight / (n * ori_diffs[i]);
    total += width_with_gradient(prefix_layers, boxes[i], grad, scale) / ori_diffs[i];
  }
  return total / n;
}

}  // namespace

void CalibrationTrace::write_csv(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write calibration trace " + path.string());
  out << "iter,l_fair,l_bce\n";
  for (std::size_t t = 0; t < l_fair.size(); ++t) {
    out << t << ',' << detail::format_real(l_fair[t]) << ',' << detail::format_real(l_bce[t])
        << '\n';
  }
  out << l_fair.size() << ',' << detail::format_real(final_l_fair) << ','
      << detail::format_real(final_l_bce) << '\n';
}

std::vector<double> original_diffs(const FeatureExtractor& prefix, std::span<const Box> boxes) {
  std::vector<double> out;
  out.reserve(boxes.size());
  for (const auto& box : boxes) out.push_back(ibp_concrete(prefix, box).features.width_l1());
  return out;
}

double fairness_loss(const FeatureExtractor& prefix, std::span<const Box> boxes,
                     std::span<const double> ori_diffs, double ori_diff_floor) {
  for (const auto& box : boxes) {
    if (box.dim() != prefix.input_dim()) throw InputError("box width does not match network");
  }
  return fair_loss_impl(prefix.layers(), boxes, ori_diffs, ori_diff_floor, nullptr, 1.0);
}

double bce_loss(const Mlp& net, std::span<const Sample> rows) {
  return detail::bce_with_gradient(net.layers(), rows, nullptr);
}

double calibration_objective(const Mlp& net, std::span<const Box> boxes,
                             std::span<const double> ori_diffs, std::span<const Sample> calib,
                             const CalibrationConfig& cfg, std::vector<AffineLayer>* grad,
                             double* l_fair, double* l_bce) {
  const auto& layers = net.layers();
  const std::vector<AffineLayer> prefix(layers.begin(), layers.end() - 1);
  std::vector<AffineLayer> full_grad;
  if (grad != nullptr) {
    full_grad = detail::zeros_like(layers);
  }
  std::vector<AffineLayer> prefix_grad = detail::zeros_like(prefix);
  const double fair = fair_loss_impl(prefix, boxes, ori_diffs, cfg.ori_diff_floor,
                                     grad ? &prefix_grad : nullptr, cfg.fairness_weight);
  const double bce = detail::bce_with_gradient(layers, calib, grad ? &full_grad : nullptr);
  if (grad != nullptr) {
    grad->resize(prefix.size());
    for (std::size_t k = 0; k < prefix.size(); ++k) {
      (*grad)[k].weight = prefix_grad[k].weight + full_grad[k].weight;
      (*grad)[k].bias = prefix_grad[k].bias + full_grad[k].bias;
    }
  }
  if (l_fair) *l_fair = fair;
  if (l_bce) *l_bce = bce;
  return cfg.fairness_weight * fair + bce;
}

CalibrationResult calibrate(const Mlp& net, std::span<const Box> repair_boxes,
                            std::span<const Sample> calib, const CalibrationConfig& cfg) {
  if (cfg.max_iter < 0) throw ConfigError("calibration max_iter must be >= 0");
  if (!(cfg.learning_rate >= 0.0)) throw ConfigError("calibration learning rate must be >= 0");
  const FeatureExtractor prefix = net.feature_extractor();
  CalibrationResult result{net, {}};
  result.trace.ori_diff = original_diffs(prefix, repair_boxes);
  if (cfg.max_iter == 0) {
    if (!calib.empty()) {
      result.trace.final_l_bce = bce_loss(net, calib);
    }
    result.trace.final_l_fair = fairness_loss(prefix, repair_boxes, result.trace.ori_diff,
                                              cfg.ori_diff_floor);
    return result;
  }
  if (calib.empty()) throw InputError("calibration set D_c is empty");

  std::vector<AffineLayer> layers = net.layers();
  std::vector<AffineLayer> velocity = detail::zeros_like(
      std::vector<AffineLayer>(layers.begin(), layers.end() - 1));
  std::vector<AffineLayer> grad;
  for (int t = 0; t < cfg.max_iter; ++t) {
    double fair = 0.0, bce = 0.0;
    const Mlp current(layers);
    const double total = calibration_objective(current, repair_boxes, result.trace.ori_diff,
                                               calib, cfg, &grad, &fair, &bce);
    if (!std::isfinite(total)) {
      throw NumericalError("calibration loss became non-finite at iteration " +
                           std::to_string(t));
    }
    result.trace.l_fair.push_back(fair);
    result.trace.l_bce.push_back(bce);
    for (std::size_t k = 0; k < grad.size(); ++k) {
      if (cfg.momentum != 0.0) {
        velocity[k].weight = cfg.momentum * velocity[k].weight + grad[k].weight;
        velocity[k].bias = cfg.momentum * velocity[k].bias + grad[k].bias;
        layers[k].weight -= cfg.learning_rate * velocity[k].weight;
        layers[k].bias -= cfg.learning_rate * velocity[k].bias;
      } else {
        layers[k].weight -= cfg.learning_rate * grad[k].weight;
        layers[k].bias -= cfg.learning_rate * grad[k].bias;
      }
    }
  }
  result.model = Mlp(std::move(layers));
  double fair = 0.0, bce = 0.0;
  const double total = calibration_objective(result.model, repair_boxes, result.trace.ori_diff,
                                             calib, cfg, nullptr, &fair, &bce);
  if (!std::isfinite(total)) {
    throw NumericalError("calibration loss became non-finite at iteration " +
                         std::to_string(cfg.max_iter));
  }
  result.trace.final_l_fair = fair;
  result.trace.final_l_bce = bce;
  return result;
}

}  // namespace fairrepair
