#pragma once

#include "fairrepair/model.hpp"
#include "fairrepair/schema.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace fairrepair {

// He-uniform weights, zero biases. dims = {m, hidden..., 1}.
Mlp init_mlp(const std::vector<Eigen::Index>& dims, std::uint64_t seed);

struct TrainOptions {
  int epochs = 80;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  std::size_t batch_size = 32;
};

// Mini-batch Adam on mean binary cross-entropy. With a minmax-scaled schema
// the model is trained on [0,1] inputs and the scaling is folded into the
// first layer, so the returned network takes raw schema units.
Mlp train_baseline(const Dataset& data, const std::vector<Eigen::Index>& dims,
                   const TrainOptions& options);
Mlp train_baseline(const Dataset& data, const std::vector<Eigen::Index>& dims, int epochs,
                   double lr, std::uint64_t seed);

double accuracy(const Mlp& net, std::span<const Sample> rows);

struct SyntheticSpec {
  std::uint64_t seed = 0;
  Eigen::Index num_attributes = 6;      // m, including the protected one
  std::vector<Eigen::Index> hidden{8, 8};  // hidden widths; last one is d
  double bias_strength = 1.0;
  std::size_t rows = 700;
  TrainOptions train{};
};

struct SyntheticInstance {
  Dataset data;
  Mlp model;
};

// Tabular data with one binary protected attribute (column 0) whose value
// shifts the label score in proportion to bias_strength, plus a model
// trained on it.
SyntheticInstance gen_synthetic(const SyntheticSpec& spec);
// The data half of gen_synthetic (spec.hidden and spec.train are ignored).
Dataset gen_synthetic_data(const SyntheticSpec& spec);
SyntheticInstance gen_synthetic(std::uint64_t seed, Eigen::Index m, Eigen::Index d,
                                double bias_strength);

namespace detail {

// Mean BCE over `rows`; when `grads` is non-null adds scale * d(loss)/d(param)
// for every layer into it (grads must match the layer shapes).
double bce_with_gradient(const std::vector<AffineLayer>& layers, std::span<const Sample> rows,
                         std::vector<AffineLayer>* grads, double scale = 1.0);

std::vector<AffineLayer> zeros_like(const std::vector<AffineLayer>& layers);

}  // namespace detail

}  // namespace fairrepair
