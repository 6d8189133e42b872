#pragma once

#include "fairrepair/bounds.hpp"
#include "fairrepair/model.hpp"
#include "fairrepair/schema.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace fairrepair {

struct CalibrationConfig {
  int max_iter = 200;
  double learning_rate = 0.001;
  // Repair inputs whose original feature-bound width is below this floor
  // contribute 0 to the fairness loss.
  double ori_diff_floor = 1e-9;
  double fairness_weight = 1.0;
  // Heavy-ball momentum; 0 is plain gradient descent.
  double momentum = 0.0;
};

struct CalibrationTrace {
  // Loss values evaluated before each of the max_iter updates.
  std::vector<double> l_fair;
  std::vector<double> l_bce;
  // Losses of the returned network.
  double final_l_fair = 0.0;
  double final_l_bce = 0.0;
  std::vector<double> ori_diff;

  // iter,l_fair,l_bce ; the last row (iter = max_iter) is the returned network.
  void write_csv(const std::filesystem::path& path) const;
};

// ||hbar - hlow||_1 of the IBP feature bounds, per box.
std::vector<double> original_diffs(const FeatureExtractor& prefix, std::span<const Box> boxes);

double fairness_loss(const FeatureExtractor& prefix, std::span<const Box> boxes,
                     std::span<const double> ori_diffs, double ori_diff_floor = 1e-9);

double bce_loss(const Mlp& net, std::span<const Sample> rows);

// fairness_weight * L_fair + L_bce, with its gradient with respect to the
// feature-extractor parameters (one entry per extractor layer) when `grad`
// is non-null. The final layer is treated as a constant.
double calibration_objective(const Mlp& net, std::span<const Box> boxes,
                             std::span<const double> ori_diffs, std::span<const Sample> calib,
                             const CalibrationConfig& cfg, std::vector<AffineLayer>* grad,
                             double* l_fair = nullptr, double* l_bce = nullptr);

struct CalibrationResult {
  Mlp model;
  CalibrationTrace trace;
};

// Full-batch gradient descent on L_fair + L_bce over the feature extractor.
// The final layer is returned bit-identical.
CalibrationResult calibrate(const Mlp& net, std::span<const Box> repair_boxes,
                            std::span<const Sample> calib, const CalibrationConfig& cfg);

}  // namespace fairrepair
