#pragma once

#include "fairrepair/model.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace fairrepair {

enum class AttributeKind { sensitive, nonsensitive };
enum class ValueType { integer, continuous };

struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::nonsensitive;
  double lo = 0.0;
  double hi = 0.0;
  ValueType type = ValueType::continuous;
  // Tolerance on non-sensitive attributes; 0 means exact match.
  double epsilon = 0.0;
};

class AttributeSchema {
 public:
  AttributeSchema() = default;
  explicit AttributeSchema(std::vector<Attribute> attributes, bool minmax_scaling = false);

  std::size_t size() const { return attributes_.size(); }
  const Attribute& operator[](std::size_t j) const { return attributes_[j]; }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::vector<std::size_t>& protected_indices() const { return protected_; }
  const std::vector<std::size_t>& nonsensitive_indices() const { return nonsensitive_; }
  // Train in [0,1]-scaled units; the scaling is folded back into layer 0.
  bool minmax_scaling() const { return minmax_scaling_; }

  bool contains(const Vector& x, double tol = 1e-12) const;
  // Returns a copy with every non-sensitive epsilon replaced.
  AttributeSchema with_epsilons(const std::vector<double>& eps) const;

 private:
  std::vector<Attribute> attributes_;
  std::vector<std::size_t> protected_;
  std::vector<std::size_t> nonsensitive_;
  bool minmax_scaling_ = false;
};

struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);
  static Box point(const Vector& x) { return Box(x, x); }

  Eigen::Index dim() const { return lower.size(); }
  bool contains(const Vector& x, double tol = 0.0) const;
  bool contains(const Box& other) const;
};

struct Sample {
  Vector x;
  int label = 0;
};

struct Dataset {
  AttributeSchema schema;
  std::vector<Sample> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
};

// Similarity neighbourhood: protected attributes span their full range,
// non-sensitive ones stay within epsilon (clipped to the domain).
Box neighborhood(const AttributeSchema& schema, const Vector& x);

// All grid points of the neighbourhood when every varying dimension is
// integer valued and the count stays within `cap`; std::nullopt otherwise.
std::optional<std::vector<Vector>> enumerate_neighborhood(const AttributeSchema& schema,
                                                          const Vector& x,
                                                          std::size_t cap = 1'000'000);

// Per-dimension candidate values of the neighbourhood grid, or nullopt when a
// dimension is continuous with nonzero width.
std::optional<std::vector<std::vector<double>>> neighborhood_grid(const AttributeSchema& schema,
                                                                  const Vector& x);

AttributeSchema load_schema(const std::filesystem::path& path);
void save_schema(const AttributeSchema& schema, const std::filesystem::path& path);
std::string schema_to_text(const AttributeSchema& schema);
AttributeSchema schema_from_text(const std::string& text);

Dataset load_dataset(const std::filesystem::path& csv_path,
                     const std::filesystem::path& schema_path);
Dataset dataset_from_csv(const std::string& csv, const AttributeSchema& schema);
std::string dataset_to_csv(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& csv_path);

struct RepairSplit {
  Dataset repair;       // D_r
  Dataset calibration;  // D_c
  Dataset test;         // remainder
};

RepairSplit split_repair_sets(const Dataset& data, std::size_t n_repair, std::size_t n_calib,
                              std::uint64_t seed);

std::vector<Vector> inputs_of(const Dataset& data);

}  // namespace fairrepair
