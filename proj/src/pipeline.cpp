#include "fairrepair/pipeline.hpp"

#include "fairrepair/errors.hpp"
#include "fairrepair/lp_format.hpp"
#include "text_util.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace fairrepair {

namespace {

class Stopwatch {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

std::vector<Vector> points_of(const Dataset& d) { return inputs_of(d); }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

}  // namespace

const char* to_string(RepairMode mode) { return mode == RepairMode::naive ? "naive" : "symbolic"; }

RepairMode parse_repair_mode(const std::string& text) {
  if (text == "naive") return RepairMode::naive;
  if (text == "symbolic") return RepairMode::symbolic;
  throw ConfigError("unknown repair mode '" + text + "' (expected naive or symbolic)");
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("FAIRREPAIR_OUT"); env && *env) return env;
  return "fairrepair_out";
}

RepairOutcome repair_model(const Mlp& net, const AttributeSchema& schema,
                           const RepairSplit& split, const RepairConfig& cfg) {
  if (split.repair.empty()) throw InputError("repair set is empty");
  if (cfg.max_m_retries < 0) throw ConfigError("max_m_retries must be nonnegative");
  strict_margin(cfg.encode);

  RepairOutcome out{net, {}, {}, {}};
  auto& rep = out.report;
  rep.mode = cfg.mode;
  rep.seed = cfg.seed;
  rep.n_repair = split.repair.size();
  Stopwatch clock;

  const auto repair_points = points_of(split.repair);
  std::vector<Vector> all_points = repair_points;
  for (const auto* part : {&split.calibration, &split.test}) {
    for (const auto& r : part->rows) all_points.push_back(r.x);
  }
  const std::vector<Sample>& test_rows = split.test.empty() ? split.calibration.rows : split.test.rows;
  rep.acc_before = test_rows.empty() ? 0.0 : accuracy(net, test_rows);

  VerifyOptions vopts = cfg.metrics.verify;
  vopts.integer_dims = integer_mask(schema);
  const double cur_before = cur(net, repair_points, schema, vopts);
  if (cfg.compute_metrics) {
    rep.before = compute_metrics(net, repair_points, all_points, schema, cfg.metrics);
    rep.metrics_computed = true;
  }
  rep.seconds.metrics += clock.lap();

  if (cur_before == 0.0) {
    // Nothing to repair: every neighbourhood is already certified fair.
    rep.already_fair = true;
    rep.acc_calibrated = rep.acc_after = rep.acc_before;
    rep.after = rep.before;
    return out;
  }

  std::vector<Box> boxes;
  for (const auto& x : repair_points) boxes.push_back(neighborhood(schema, x));
  auto calibrated = calibrate(net, boxes, split.calibration.rows, cfg.calibration);
  out.trace = std::move(calibrated.trace);
  rep.l_fair_initial = out.trace.l_fair.empty() ? out.trace.final_l_fair : out.trace.l_fair.front();
  rep.l_fair_final = out.trace.final_l_fair;
  const Mlp& cal = calibrated.model;
  rep.acc_calibrated = test_rows.empty() ? 0.0 : accuracy(cal, test_rows);
  rep.seconds.calibrate = clock.lap();

  const FeatureExtractor prefix = cal.feature_extractor();
  std::vector<IntervalVector> concrete;
  std::vector<SymbolicBounds> symbolic;
  for (const auto& box : boxes) {
    if (cfg.mode == RepairMode::naive) {
      concrete.push_back(ibp_concrete(prefix, box).features);
    } else {
      symbolic.push_back(symbolic_bounds(prefix, box, cfg.slope));
    }
  }
  rep.seconds.bounds = clock.lap();

  EncodeConfig enc = cfg.encode;
  for (int attempt = 0; attempt <= cfg.max_m_retries; ++attempt) {
    out.problem = cfg.mode == RepairMode::naive
                      ? build_naive(concrete, cal.final_layer(), enc)
                      : build_symbolic(symbolic, boxes, cal.final_layer(), enc);
    if (cfg.mode == RepairMode::naive) {
      rep.big_m = big_m(enc, cal.final_layer(), concrete);
    } else {
      std::vector<IntervalVector> conc;
      for (std::size_t i = 0; i < symbolic.size(); ++i) conc.push_back(concretize(symbolic[i], boxes[i]));
      rep.big_m = big_m(enc, cal.final_layer(), conc);
    }
    if (cfg.export_lp) export_lp_file(out.problem, *cfg.export_lp);
    rep.seconds.encode += clock.lap();

    const MilpSolution sol = solve_milp(out.problem, cfg.limits);
    rep.seconds.solve += clock.lap();
    rep.milp_nodes += sol.nodes;
    if (sol.status == MilpStatus::infeasible) {
      throw SolverError("repair MILP is infeasible within the delta box of +-" +
                        detail::format_real(enc.delta_max) + "; try a larger --delta-max");
    }
    if (sol.status == MilpStatus::unbounded) throw SolverError("repair MILP is unbounded");
    if (sol.status == MilpStatus::timeout) {
      std::ostringstream msg;
      msg << "repair MILP timed out after " << sol.nodes << " nodes";
      if (sol.has_incumbent()) {
        msg << "; incumbent objective " << sol.objective << ", bound " << sol.best_bound;
      } else {
        msg << " without a feasible solution";
      }
      throw SolverError(msg.str());
    }

    const FinalLayerDelta delta = extract_delta(out.problem, sol.values);
    const Mlp repaired = cal.apply_repair(delta);
    rep.milp_objective = sol.objective;
    rep.delta_l1 = delta.l1_norm();

    bool certified = true;
    for (const auto& x : repair_points) {
      if (!is_fair(repaired, x, neighborhood(schema, x), vopts, false).fair()) {
        certified = false;
        break;
      }
    }
    rep.seconds.verify += clock.lap();
    if (certified) {
      out.model = repaired;
      rep.m_retries = attempt;
      rep.acc_after = test_rows.empty() ? 0.0 : accuracy(repaired, test_rows);
      if (cfg.compute_metrics) {
        rep.after = compute_metrics(repaired, repair_points, all_points, schema, cfg.metrics);
      }
      rep.seconds.metrics += clock.lap();
      return out;
    }
    enc.m_scale *= 2.0;
  }
  throw SolverError("repaired model failed exact certification after " +
                    std::to_string(cfg.max_m_retries) + " big-M retries; no model emitted");
}

RepairReport run_repair(const RepairConfig& cfg) {
  const Mlp net = load_model(cfg.model_path);
  const Dataset data = load_dataset(cfg.data_path, cfg.schema_path);
  if (static_cast<std::size_t>(net.input_dim()) != data.schema.size()) {
    throw StructureError("model input width " + std::to_string(net.input_dim()) +
                         " does not match the schema's " + std::to_string(data.schema.size()) +
                         " attributes");
  }
  const RepairSplit split = split_repair_sets(data, cfg.n_repair, cfg.n_calib, cfg.seed);
  const auto dir = cfg.output_dir.empty() ? default_output_dir() : cfg.output_dir;
  std::filesystem::create_directories(dir);

  RepairOutcome out = repair_model(net, data.schema, split, cfg);
  if (!out.report.already_fair) {
    out.report.trace_path = dir / "calibration_trace.csv";
    out.trace.write_csv(out.report.trace_path);
  }
  save_model(out.model, dir / "repaired_model.txt");
  write_text(dir / "report.csv", out.report.to_csv());
  write_text(dir / "report.txt", out.report.to_table());
  return out.report;
}

std::string RepairReport::to_csv() const {
  using detail::format_real;
  std::ostringstream o;
  o << "field,value\n";
  o << "mode," << to_string(mode) << '\n';
  o << "seed," << seed << '\n';
  o << "n_repair," << n_repair << '\n';
  o << "already_fair," << (already_fair ? 1 : 0) << '\n';
  o << "acc_before," << format_real(acc_before) << '\n';
  o << "acc_calibrated," << format_real(acc_calibrated) << '\n';
  o << "acc_after," << format_real(acc_after) << '\n';
  if (metrics_computed) {
    o << "cur_before," << format_real(before.cur) << '\n';
    o << "cur_after," << format_real(after.cur) << '\n';
    o << "idi_d_before," << format_real(before.idi_d) << '\n';
    o << "idi_d_after," << format_real(after.idi_d) << '\n';
    o << "idi_s_before," << format_real(before.idi_s) << '\n';
    o << "idi_s_after," << format_real(after.idi_s) << '\n';
    o << "idi_k," << before.k << '\n';
    o << "idi_samples," << before.sample_count << '\n';
  }
  o << "milp_objective," << format_real(milp_objective) << '\n';
  o << "delta_l1," << format_real(delta_l1) << '\n';
  o << "milp_nodes," << milp_nodes << '\n';
  o << "big_m," << format_real(big_m) << '\n';
  o << "m_retries," << m_retries << '\n';
  o << "l_fair_initial," << format_real(l_fair_initial) << '\n';
  o << "l_fair_final," << format_real(l_fair_final) << '\n';
  o << "trace_path," << trace_path.string() << '\n';
  o << "seconds_calibrate," << format_real(seconds.calibrate) << '\n';
  o << "seconds_bounds," << format_real(seconds.bounds) << '\n';
  o << "seconds_encode," << format_real(seconds.encode) << '\n';
  o << "seconds_solve," << format_real(seconds.solve) << '\n';
  o << "seconds_verify," << format_real(seconds.verify) << '\n';
  o << "seconds_metrics," << format_real(seconds.metrics) << '\n';
  return o.str();
}

std::string RepairReport::to_table() const {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(4);
  auto pct = [](double v) { return 100.0 * v; };
  o << "repair mode " << to_string(mode) << ", seed " << seed << ", " << n_repair
    << " repair inputs\n";
  if (already_fair) o << "model already certified fair on every repair input; unchanged\n";
  o << "                  before      after\n";
  o.precision(2);
  o << "accuracy       " << std::setw(8) << pct(acc_before) << "%  " << std::setw(8)
    << pct(acc_after) << "%   (calibrated " << pct(acc_calibrated) << "%)\n";
  if (metrics_computed) {
    o << "CUR            " << std::setw(8) << pct(before.cur) << "%  " << std::setw(8)
      << pct(after.cur) << "%\n";
    o << "IDI-D          " << std::setw(8) << pct(before.idi_d) << "%  " << std::setw(8)
      << pct(after.idi_d) << "%\n";
    o << "IDI-S          " << std::setw(8) << pct(before.idi_s) << "%  " << std::setw(8)
      << pct(after.idi_s) << "%\n";
  }
  o.precision(6);
  o << "MILP objective  " << milp_objective << "  (|dW|_1 + |db|_1 = " << delta_l1 << ")\n";
  o << "B&B nodes " << milp_nodes << ", big-M " << big_m << ", retries " << m_retries << '\n';
  o << "L_fair " << l_fair_initial << " -> " << l_fair_final << '\n';
  o.precision(3);
  o << "seconds: calibrate " << seconds.calibrate << ", bounds " << seconds.bounds << ", encode "
    << seconds.encode << ", solve " << seconds.solve << ", verify " << seconds.verify
    << ", metrics " << seconds.metrics << '\n';
  return o.str();
}

}  // namespace fairrepair
