#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace fairrepair {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct AffineLayer {
  Matrix weight;  // out x in
  Vector bias;    // out

  Eigen::Index input_dim() const { return weight.cols(); }
  Eigen::Index output_dim() const { return weight.rows(); }
  Vector apply(const Vector& x) const { return weight * x + bias; }
};

// Modification of the single-output final layer: W + delta_w, b + delta_b.
struct FinalLayerDelta {
  Vector delta_w;
  double delta_b = 0.0;

  double l1_norm() const { return delta_w.lpNorm<1>() + std::abs(delta_b); }
};

// Affine layers, each followed by ReLU. This is the feature extractor of an
// Mlp: everything except the final linear layer.
class FeatureExtractor {
 public:
  FeatureExtractor() = default;
  FeatureExtractor(std::vector<AffineLayer> layers, Eigen::Index input_dim);

  const std::vector<AffineLayer>& layers() const { return layers_; }
  Eigen::Index input_dim() const { return input_dim_; }
  Eigen::Index output_dim() const;

  Vector forward(const Vector& x) const;

 private:
  std::vector<AffineLayer> layers_;
  Eigen::Index input_dim_ = 0;
};

// Feed-forward ReLU binary classifier. ReLU follows every affine layer except
// the last, which has exactly one output row. f(x) >= 0 is the positive class.
class Mlp {
 public:
  explicit Mlp(std::vector<AffineLayer> layers);
  Mlp(const FeatureExtractor& features, AffineLayer head);

  const std::vector<AffineLayer>& layers() const { return layers_; }
  const AffineLayer& final_layer() const { return layers_.back(); }
  Eigen::Index input_dim() const { return layers_.front().input_dim(); }
  Eigen::Index feature_dim() const { return layers_.back().input_dim(); }
  // Widths m, hidden..., 1.
  std::vector<Eigen::Index> dims() const;

  double forward(const Vector& x) const;
  Vector forward_features(const Vector& x) const;

  // Throws StructureError for a single-layer network.
  std::pair<FeatureExtractor, AffineLayer> split() const;
  FeatureExtractor feature_extractor() const { return split().first; }

  // Returns a copy whose final layer is (W + delta_w, b + delta_b).
  Mlp apply_repair(const FinalLayerDelta& delta) const;

 private:
  std::vector<AffineLayer> layers_;
};

inline bool classify(double logit) { return logit >= 0.0; }

// FNV-1a over the raw bytes of every weight and bias.
std::uint64_t fingerprint(const FeatureExtractor& prefix);
std::uint64_t fingerprint(const AffineLayer& layer);

// Text model format, see README. Reals use shortest round-trip decimal form.
std::string model_to_text(const Mlp& net);
Mlp model_from_text(const std::string& text);
void save_model(const Mlp& net, const std::filesystem::path& path);
Mlp load_model(const std::filesystem::path& path);

}  // namespace fairrepair
