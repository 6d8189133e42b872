#include "fairrepair/train.hpp"

#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fairrepair {

namespace detail {

std::vector<AffineLayer> zeros_like(const std::vector<AffineLayer>& layers) {
  std::vector<AffineLayer> out;
  out.reserve(layers.size());
  for (const auto& l : layers) {
    out.push_back({Matrix::Zero(l.weight.rows(), l.weight.cols()), Vector::Zero(l.bias.size())});
  }
  return out;
}

double bce_with_gradient(const std::vector<AffineLayer>& layers, std::span<const Sample> rows,
                         std::vector<AffineLayer>* grads, double scale) {
  if (rows.empty()) throw InputError("binary cross-entropy needs at least one row");
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix act(layers.front().input_dim(), n);
  Eigen::RowVectorXd y(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    act.col(c) = rows[c].x;
    y(c) = rows[c].label;
  }
  // activations[k] is the input of layer k.
  std::vector<Matrix> activations{act};
  for (std::size_t k = 0; k < layers.size(); ++k) {
    Matrix z = (layers[k].weight * activations.back()).colwise() + layers[k].bias;
    if (k + 1 < layers.size()) z = z.cwiseMax(0.0);
    activations.push_back(std::move(z));
  }
  const Eigen::RowVectorXd logits = activations.back().row(0);
  double loss = 0.0;
  Eigen::RowVectorXd dlogit(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    const double z = logits(c);
    loss += std::max(z, 0.0) - z * y(c) + std::log1p(std::exp(-std::abs(z)));
    dlogit(c) = (1.0 / (1.0 + std::exp(-z)) - y(c)) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (grads == nullptr) return loss;

  Matrix delta = dlogit;  // d loss / d pre-activation of current layer
  for (std::size_t k = layers.size(); k-- > 0;) {
    const Matrix& input = activations[k];
    (*grads)[k].weight += scale * delta * input.transpose();
    (*grads)[k].bias += scale * delta.rowwise().sum();
    if (k == 0) break;
    Matrix back = layers[k].weight.transpose() * delta;
    // input = ReLU(z); derivative 0 where the activation is zero.
    delta = back.cwiseProduct((input.array() > 0.0).cast<double>().matrix());
  }
  return loss;
}

}  // namespace detail

Mlp init_mlp(const std::vector<Eigen::Index>& dims, std::uint64_t seed) {
  if (dims.size() < 2 || dims.back() != 1) {
    throw InputError("dims must chain from the input width down to a single output");
  }
  Rng rng(seed);
  std::vector<AffineLayer> layers;
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const double limit = std::sqrt(6.0 / static_cast<double>(dims[k]));
    AffineLayer layer{Matrix(dims[k + 1], dims[k]), Vector::Zero(dims[k + 1])};
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = rng.uniform(-limit, limit);
      }
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(std::move(layers));
}

Mlp train_baseline(const Dataset& data, const std::vector<Eigen::Index>& dims,
                   const TrainOptions& options) {
  if (dims.empty() || static_cast<std::size_t>(dims.front()) != data.schema.size()) {
    throw InputError("dims must start with the schema width");
  }
  auto layers = init_mlp(dims, options.seed).layers();
  if (options.epochs <= 0 || data.empty()) return Mlp(std::move(layers));

  const auto m = static_cast<Eigen::Index>(data.schema.size());
  Vector offset = Vector::Zero(m);
  Vector range = Vector::Ones(m);
  if (data.schema.minmax_scaling()) {
    for (Eigen::Index j = 0; j < m; ++j) {
      offset(j) = data.schema[j].lo;
      const double r = data.schema[j].hi - data.schema[j].lo;
      range(j) = r > 0.0 ? r : 1.0;
    }
  }
  std::vector<Sample> rows = data.rows;
  for (auto& s : rows) s.x = (s.x - offset).cwiseQuotient(range);

  // Adam state.
  auto m1 = detail::zeros_like(layers);
  auto m2 = detail::zeros_like(layers);
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Sample> batch;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(rows[order[k]]);
      auto grads = detail::zeros_like(layers);
      detail::bce_with_gradient(layers, batch, &grads);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t k = 0; k < layers.size(); ++k) {
        auto update = [&](auto& param, auto& g, auto& s1, auto& s2) {
          s1 = beta1 * s1 + (1.0 - beta1) * g;
          s2 = beta2 * s2 + (1.0 - beta2) * g.cwiseAbs2();
          param.array() -= options.learning_rate * (s1.array() / c1) /
                           ((s2.array() / c2).sqrt() + eps);
        };
        update(layers[k].weight, grads[k].weight, m1[k].weight, m2[k].weight);
        update(layers[k].bias, grads[k].bias, m1[k].bias, m2[k].bias);
      }
    }
  }

  // Fold x_s = (x - offset) / range into the first layer.
  auto& first = layers.front();
  first.weight = first.weight * range.cwiseInverse().asDiagonal();
  first.bias -= first.weight * offset;
  return Mlp(std::move(layers));
}

Mlp train_baseline(const Dataset& data, const std::vector<Eigen::Index>& dims, int epochs,
                   double lr, std::uint64_t seed) {
  TrainOptions options;
  options.epochs = epochs;
  options.learning_rate = lr;
  options.seed = seed;
  return train_baseline(data, dims, options);
}

double accuracy(const Mlp& net, std::span<const Sample> rows) {
  if (rows.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : rows) {
    if (classify(net.forward(s.x)) == (s.label == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(rows.size());
}

Dataset gen_synthetic_data(const SyntheticSpec& spec) {
  const Eigen::Index m = spec.num_attributes;
  if (m < 2) throw InputError("synthetic data needs at least two attributes");
  if (spec.rows == 0) throw InputError("synthetic data needs at least one row");

  std::vector<Attribute> attrs;
  attrs.push_back({"group", AttributeKind::sensitive, 0.0, 1.0, ValueType::integer, 0.0});
  for (Eigen::Index j = 1; j < m; ++j) {
    if (j % 3 == 0) {
      attrs.push_back({"f" + std::to_string(j), AttributeKind::nonsensitive, 0.0, 1.0,
                       ValueType::continuous, 0.0});
    } else {
      attrs.push_back({"f" + std::to_string(j), AttributeKind::nonsensitive, 0.0, 9.0,
                       ValueType::integer, 0.0});
    }
  }
  AttributeSchema schema(std::move(attrs), /*minmax_scaling=*/true);

  Rng rng(spec.seed);
  Vector direction(m);
  for (Eigen::Index j = 0; j < m; ++j) direction(j) = rng.normal();
  direction /= std::sqrt(static_cast<double>(m - 1));

  Dataset data{schema, {}};
  for (std::size_t r = 0; r < spec.rows; ++r) {
    Sample s;
    s.x.resize(m);
    s.x(0) = static_cast<double>(rng.index(2));
    double score = 0.0;
    for (Eigen::Index j = 1; j < m; ++j) {
      double standardized = 0.0;
      if (schema[j].type == ValueType::integer) {
        s.x(j) = static_cast<double>(rng.index(10));
        standardized = (s.x(j) - 4.5) / 2.8723;
      } else {
        s.x(j) = rng.uniform();
        standardized = (s.x(j) - 0.5) / 0.28868;
      }
      score += direction(j) * standardized;
    }
    // Shift of the label score between the two groups at bias_strength 1.
    constexpr double kGroupShift = 0.2;
    score += spec.bias_strength * kGroupShift * (2.0 * s.x(0) - 1.0);
    score += 0.25 * rng.normal();
    s.label = score > 0.0 ? 1 : 0;
    data.rows.push_back(std::move(s));
  }

  return data;
}

SyntheticInstance gen_synthetic(const SyntheticSpec& spec) {
  if (spec.hidden.empty()) throw InputError("synthetic model needs a hidden layer");
  for (auto w : spec.hidden) {
    if (w < 1) throw InputError("hidden widths must be positive");
  }
  Dataset data = gen_synthetic_data(spec);
  std::vector<Eigen::Index> dims{spec.num_attributes};
  dims.insert(dims.end(), spec.hidden.begin(), spec.hidden.end());
  dims.push_back(1);
  TrainOptions train = spec.train;
  train.seed = spec.seed + 1;
  Mlp model = train_baseline(data, dims, train);
  return {std::move(data), std::move(model)};
}

SyntheticInstance gen_synthetic(std::uint64_t seed, Eigen::Index m, Eigen::Index d,
                                double bias_strength) {
  SyntheticSpec spec;
  spec.seed = seed;
  spec.num_attributes = m;
  spec.hidden = {d, d};
  spec.bias_strength = bias_strength;
  return gen_synthetic(spec);
}

}  // namespace fairrepair
