#include "fairrepair/model.hpp"

#include "fairrepair/errors.hpp"
#include "text_util.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace fairrepair {

namespace {

void check_finite(const AffineLayer& layer, std::size_t k) {
  if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
    throw StructureError("layer " + std::to_string(k) + " has non-finite parameters");
  }
}

void check_chain(const std::vector<AffineLayer>& layers, Eigen::Index input_dim) {
  Eigen::Index width = input_dim;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& layer = layers[k];
    if (layer.weight.rows() != layer.bias.size()) {
      throw StructureError("layer " + std::to_string(k) + ": weight has " +
                           std::to_string(layer.weight.rows()) + " rows but bias has " +
                           std::to_string(layer.bias.size()) + " entries");
    }
    if (layer.weight.cols() != width) {
      throw StructureError("layer " + std::to_string(k) + ": expects input width " +
                           std::to_string(layer.weight.cols()) + ", previous width is " +
                           std::to_string(width));
    }
    check_finite(layer, k);
    width = layer.weight.rows();
  }
}

Vector relu(Vector v) { return v.cwiseMax(0.0); }

void fnv_mix(std::uint64_t& h, const double* data, Eigen::Index n) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < static_cast<std::size_t>(n) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

FeatureExtractor::FeatureExtractor(std::vector<AffineLayer> layers, Eigen::Index input_dim)
    : layers_(std::move(layers)), input_dim_(input_dim) {
  check_chain(layers_, input_dim_);
}

Eigen::Index FeatureExtractor::output_dim() const {
  return layers_.empty() ? input_dim_ : layers_.back().output_dim();
}

Vector FeatureExtractor::forward(const Vector& x) const {
  if (x.size() != input_dim_) {
    throw InputError("input has " + std::to_string(x.size()) + " entries, network expects " +
                     std::to_string(input_dim_));
  }
  Vector h = x;
  for (const auto& layer : layers_) h = relu(layer.apply(h));
  return h;
}

Mlp::Mlp(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw StructureError("network has no layers");
  check_chain(layers_, layers_.front().input_dim());
  if (layers_.back().output_dim() != 1) {
    throw StructureError("final layer must have exactly one output, has " +
                         std::to_string(layers_.back().output_dim()));
  }
}

Mlp::Mlp(const FeatureExtractor& features, AffineLayer head)
    : Mlp([&] {
        auto layers = features.layers();
        layers.push_back(std::move(head));
        return layers;
      }()) {
  if (layers_.front().input_dim() != features.input_dim()) {
    throw StructureError("head does not match feature extractor width");
  }
}

std::vector<Eigen::Index> Mlp::dims() const {
  std::vector<Eigen::Index> d{input_dim()};
  for (const auto& layer : layers_) d.push_back(layer.output_dim());
  return d;
}

Vector Mlp::forward_features(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw InputError("input has " + std::to_string(x.size()) + " entries, network expects " +
                     std::to_string(input_dim()));
  }
  Vector h = x;
  for (std::size_t k = 0; k + 1 < layers_.size(); ++k) h = relu(layers_[k].apply(h));
  return h;
}

double Mlp::forward(const Vector& x) const {
  return final_layer().apply(forward_features(x))(0);
}

std::pair<FeatureExtractor, AffineLayer> Mlp::split() const {
  if (layers_.size() < 2) {
    throw StructureError("cannot split a single-layer network into extractor and head");
  }
  std::vector<AffineLayer> prefix(layers_.begin(), layers_.end() - 1);
  return {FeatureExtractor(std::move(prefix), input_dim()), layers_.back()};
}

Mlp Mlp::apply_repair(const FinalLayerDelta& delta) const {
  if (delta.delta_w.size() != feature_dim()) {
    throw InputError("repair delta has " + std::to_string(delta.delta_w.size()) +
                     " weights, final layer has " + std::to_string(feature_dim()));
  }
  if (!delta.delta_w.allFinite() || !std::isfinite(delta.delta_b)) {
    throw InputError("repair delta is not finite");
  }
  auto layers = layers_;
  layers.back().weight.row(0) += delta.delta_w.transpose();
  layers.back().bias(0) += delta.delta_b;
  return Mlp(std::move(layers));
}

std::uint64_t fingerprint(const FeatureExtractor& prefix) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& layer : prefix.layers()) {
    fnv_mix(h, layer.weight.data(), layer.weight.size());
    fnv_mix(h, layer.bias.data(), layer.bias.size());
  }
  return h;
}

std::uint64_t fingerprint(const AffineLayer& layer) {
  std::uint64_t h = 14695981039346656037ULL;
  fnv_mix(h, layer.weight.data(), layer.weight.size());
  fnv_mix(h, layer.bias.data(), layer.bias.size());
  return h;
}

// Format:
//   # comment
//   version 1
//   activation relu
//   dims m h1 ... 1
//   layer_0.weight <row-major reals>
//   layer_0.bias <reals>
//   ...
std::string model_to_text(const Mlp& net) {
  std::ostringstream out;
  out << "# fairrepair model\nversion 1\nactivation relu\ndims";
  for (auto d : net.dims()) out << ' ' << d;
  out << '\n';
  for (std::size_t k = 0; k < net.layers().size(); ++k) {
    const auto& layer = net.layers()[k];
    out << "layer_" << k << ".weight";
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        out << ' ' << detail::format_real(layer.weight(r, c));
      }
    }
    out << "\nlayer_" << k << ".bias";
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      out << ' ' << detail::format_real(layer.bias(r));
    }
    out << '\n';
  }
  return out.str();
}

Mlp model_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool have_version = false;
  bool have_activation = false;
  std::vector<Eigen::Index> dims;
  std::map<std::size_t, std::vector<double>> weights;
  std::map<std::size_t, std::vector<double>> biases;

  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError("model line " + std::to_string(line_no) + ": " + msg);
  };

  while (std::getline(in, line)) {
    ++line_no;
    auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto tokens = detail::split_ws(body);
    const std::string key(tokens.front());
    auto values = std::vector<std::string_view>(tokens.begin() + 1, tokens.end());

    if (key == "version") {
      if (values.size() != 1 || values[0] != "1") throw fail("unsupported version");
      have_version = true;
    } else if (key == "activation") {
      if (values.size() != 1 || values[0] != "relu") {
        throw fail("only activation 'relu' is supported");
      }
      have_activation = true;
    } else if (key == "dims") {
      for (std::size_t f = 0; f < values.size(); ++f) {
        auto v = detail::parse_real(values[f]);
        if (!v || *v < 1 || *v != std::floor(*v)) {
          throw fail("field " + std::to_string(f + 1) + " of dims is not a positive integer");
        }
        dims.push_back(static_cast<Eigen::Index>(*v));
      }
    } else if (key.rfind("layer_", 0) == 0) {
      const auto dot = key.find('.');
      if (dot == std::string::npos) throw fail("unknown field '" + key + "'");
      const auto idx_text = key.substr(6, dot - 6);
      const auto kind = key.substr(dot + 1);
      std::size_t idx = 0;
      auto [p, ec] = std::from_chars(idx_text.data(), idx_text.data() + idx_text.size(), idx);
      if (ec != std::errc() || p != idx_text.data() + idx_text.size() ||
          (kind != "weight" && kind != "bias")) {
        throw fail("unknown field '" + key + "'");
      }
      std::vector<double> parsed;
      for (std::size_t f = 0; f < values.size(); ++f) {
        auto v = detail::parse_real(values[f]);
        if (!v || !std::isfinite(*v)) {
          throw fail(key + " field " + std::to_string(f + 1) + " is not a finite real");
        }
        parsed.push_back(*v);
      }
      auto& target = kind == "weight" ? weights : biases;
      if (target.count(idx)) throw fail("duplicate field '" + key + "'");
      target[idx] = std::move(parsed);
    } else {
      throw fail("unknown field '" + key + "'");
    }
  }

  if (!have_version) throw ParseError("model: missing 'version'");
  if (!have_activation) throw ParseError("model: missing 'activation'");
  if (dims.size() < 2) throw ParseError("model: 'dims' needs at least two entries");

  const std::size_t num_layers = dims.size() - 1;
  std::vector<AffineLayer> layers;
  for (std::size_t k = 0; k < num_layers; ++k) {
    const auto rows = dims[k + 1];
    const auto cols = dims[k];
    auto w = weights.find(k);
    auto b = biases.find(k);
    if (w == weights.end() || b == biases.end()) {
      throw ParseError("model: missing weight or bias for layer " + std::to_string(k));
    }
    if (static_cast<Eigen::Index>(w->second.size()) != rows * cols) {
      throw StructureError("model: layer_" + std::to_string(k) + ".weight has " +
                           std::to_string(w->second.size()) + " values, dims require " +
                           std::to_string(rows * cols));
    }
    if (static_cast<Eigen::Index>(b->second.size()) != rows) {
      throw StructureError("model: layer_" + std::to_string(k) + ".bias has " +
                           std::to_string(b->second.size()) + " values, dims require " +
                           std::to_string(rows));
    }
    AffineLayer layer;
    layer.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w->second.data(), rows, cols);
    layer.bias = Eigen::Map<const Vector>(b->second.data(), rows);
    layers.push_back(std::move(layer));
  }
  if (weights.size() != num_layers || biases.size() != num_layers) {
    throw StructureError("model: layer fields do not match dims");
  }
  return Mlp(std::move(layers));
}

void save_model(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file " + path.string());
  out << model_to_text(net);
  if (!out) throw InputError("failed writing model file " + path.string());
}

Mlp load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_text(buf.str());
}

}  // namespace fairrepair
