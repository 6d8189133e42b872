#pragma once

#include "fairrepair/branch_and_bound.hpp"
#include "fairrepair/model.hpp"
#include "fairrepair/schema.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fairrepair {

struct VerifyOptions {
  MilpLimits limits{};
  // Dimensions restricted to integers (binary expansion in the MILP). Empty
  // means every dimension ranges over the continuous box.
  std::vector<bool> integer_dims;
};

struct ExactRange {
  double min = 0.0;
  double max = 0.0;
  Vector argmin;
  Vector argmax;
  long nodes = 0;
};

// Exact output range of the network over the box by two MILPs (one binary
// per unstable ReLU, big-M from interval pre-activation bounds). min and max
// are the network values at the MILP optimizers.
ExactRange exact_range(const Mlp& net, const Box& box, const VerifyOptions& opts = {});

// The MILP behind one side of exact_range. Input variables are x_k; the
// objective omits the output bias and is negated when maximising.
MilpProblem build_range_problem(const Mlp& net, const Box& box, const VerifyOptions& opts,
                                bool maximize);

// Per-dimension integer mask implied by the schema.
std::vector<bool> integer_mask(const AttributeSchema& schema);

enum class FairStatus { certified_fair, certified_unfair };
const char* to_string(FairStatus s);

struct FairnessCertificate {
  std::size_t input_id = 0;
  FairStatus status = FairStatus::certified_fair;
  // Output range over the box. When only the decisive side was solved,
  // `exact` is false and the other side is a sound interval bound.
  double min = 0.0;
  double max = 0.0;
  bool exact = true;
  std::optional<Vector> witness;

  bool fair() const { return status == FairStatus::certified_fair; }
};

// Fair iff min >= 0 or max < 0 over the box. With full_range == false only
// the side that can flip the decision of x is solved exactly, and a linear
// bound that already certifies fairness skips the MILP.
FairnessCertificate is_fair(const Mlp& net, const Vector& x, const Box& box,
                            const VerifyOptions& opts = {}, bool full_range = true);

struct BruteForceResult {
  bool fair = true;
  // False when the neighbourhood was not finite and a grid was used instead.
  bool certificate = true;
  std::size_t points = 0;
};

// Points per continuous axis of the fallback grid.
inline constexpr std::size_t kFallbackGridPoints = 21;

BruteForceResult brute_force_fair(const Mlp& net, const AttributeSchema& schema, const Vector& x);

// Fraction of points with a certified violation in their neighbourhood.
double cur(const Mlp& net, const std::vector<Vector>& points, const AttributeSchema& schema,
           const VerifyOptions& opts = {});

enum class IdiMode { enumerate, sample };

struct IdiOptions {
  IdiMode mode = IdiMode::enumerate;
  std::size_t k = 100;
  std::uint64_t seed = 0;
};

// Fraction of points that are discriminatory instances. Finite
// neighbourhoods are enumerated in enumerate mode; otherwise k uniform draws
// per point are taken (from the grid when the neighbourhood is finite).
double idi_rate(const Mlp& net, const std::vector<Vector>& points, const AttributeSchema& schema,
                const IdiOptions& opts = {});

// Uniform draws over the schema domain; integer attributes get integers.
std::vector<Vector> sample_input_space(const AttributeSchema& schema, std::size_t n,
                                       std::uint64_t seed);

struct MetricsOptions {
  IdiOptions idi{};
  std::size_t input_samples = 10000;
  VerifyOptions verify{};
};

struct MetricsReport {
  double cur = 0.0;
  double idi_d = 0.0;
  double idi_s = 0.0;
  std::size_t repair_count = 0;
  std::size_t dataset_count = 0;
  std::size_t sample_count = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  IdiMode mode = IdiMode::enumerate;

  std::string to_csv() const;
  std::string to_table() const;
};

MetricsReport compute_metrics(const Mlp& net, const std::vector<Vector>& repair_points,
                              const std::vector<Vector>& dataset_points,
                              const AttributeSchema& schema, const MetricsOptions& opts = {});

}  // namespace fairrepair
