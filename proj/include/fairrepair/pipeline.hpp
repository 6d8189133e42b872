#pragma once

#include "fairrepair/branch_and_bound.hpp"
#include "fairrepair/calibrate.hpp"
#include "fairrepair/encode.hpp"
#include "fairrepair/train.hpp"
#include "fairrepair/verify.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace fairrepair {

enum class RepairMode { naive, symbolic };

const char* to_string(RepairMode mode);
RepairMode parse_repair_mode(const std::string& text);

struct RepairConfig {
  std::filesystem::path model_path;
  std::filesystem::path data_path;
  std::filesystem::path schema_path;
  // Empty: $FAIRREPAIR_OUT, else ./fairrepair_out.
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> export_lp;

  std::size_t n_repair = 20;
  std::size_t n_calib = 100;
  std::uint64_t seed = 0;

  RepairMode mode = RepairMode::symbolic;
  ReluLowerSlope slope = ReluLowerSlope::zero;
  CalibrationConfig calibration{};
  EncodeConfig encode{};
  MilpLimits limits{};
  int max_m_retries = 3;

  bool compute_metrics = true;
  MetricsOptions metrics{};
};

std::filesystem::path default_output_dir();

struct StageTimes {
  double calibrate = 0.0;
  double bounds = 0.0;
  double encode = 0.0;
  double solve = 0.0;
  double verify = 0.0;
  double metrics = 0.0;
};

struct RepairReport {
  RepairMode mode = RepairMode::symbolic;
  std::uint64_t seed = 0;
  std::size_t n_repair = 0;
  double acc_before = 0.0;
  double acc_calibrated = 0.0;
  double acc_after = 0.0;
  MetricsReport before{};
  MetricsReport after{};
  bool metrics_computed = false;
  double milp_objective = 0.0;
  double delta_l1 = 0.0;
  long milp_nodes = 0;
  double big_m = 0.0;
  int m_retries = 0;
  bool already_fair = false;
  double l_fair_initial = 0.0;
  double l_fair_final = 0.0;
  std::filesystem::path trace_path;
  StageTimes seconds{};

  std::string to_csv() const;
  std::string to_table() const;
};

struct RepairOutcome {
  Mlp model;  // the certified repaired network
  RepairReport report;
  CalibrationTrace trace;
  MilpProblem problem;  // last problem solved (empty when already fair)
};

// The full repair on in-memory data: calibrate the feature extractor on the repair
// neighbourhoods and the calibration rows, bound the features, solve the
// repair MILP, apply it and certify every repair input exactly. Throws
// SolverError when the MILP is infeasible or times out, and when the
// certificates still fail after the big-M retries.
RepairOutcome repair_model(const Mlp& net, const AttributeSchema& schema,
                           const RepairSplit& split, const RepairConfig& cfg);

// Loads files, splits the data, runs repair_model and writes the repaired
// model, report (table and CSV) and calibration trace to the output dir.
RepairReport run_repair(const RepairConfig& cfg);

}  // namespace fairrepair
