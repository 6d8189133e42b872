// Command-line front end: data generation, training, bounds, repair,
// verification, metrics and MILP export.

#include "CLI11.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/lp_format.hpp"
#include "fairrepair/pipeline.hpp"
#include "fairrepair/train.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace fairrepair;

namespace {

struct DataArgs {
  std::string model;
  std::string data;
  std::string schema;
  std::size_t n_repair = 20;
  std::size_t n_calib = 100;
  std::uint64_t seed = 0;
};

void add_data_args(CLI::App* cmd, DataArgs& a, bool with_model = true) {
  if (with_model) cmd->add_option("--model", a.model, "Model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--data", a.data, "Dataset CSV")->required()->check(CLI::ExistingFile);
  cmd->add_option("--schema", a.schema, "Schema file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--n-repair", a.n_repair, "Repair inputs drawn from the data")->capture_default_str();
  cmd->add_option("--n-calib", a.n_calib, "Calibration rows drawn from the data")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed for the split and every random draw")->capture_default_str();
}

std::vector<Eigen::Index> parse_widths(const std::string& text) {
  std::vector<Eigen::Index> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const long v = std::stol(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad layer width '" + item + "' in '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("no hidden widths given");
  return out;
}

Vector parse_point(const std::string& text) {
  std::vector<double> vals;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("bad coordinate '" + item + "' in '" + text + "'");
    }
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string row_text(const Vector& v) {
  std::ostringstream o;
  for (Eigen::Index k = 0; k < v.size(); ++k) o << (k ? "," : "") << v(k);
  return o.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

RepairSplit load_split(const DataArgs& a, Dataset& data) {
  data = load_dataset(a.data, a.schema);
  return split_repair_sets(data, a.n_repair, a.n_calib, a.seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Provable individual-fairness repair of ReLU classifiers"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a biased synthetic tabular dataset");
  SyntheticSpec gspec;
  std::string gen_out = "data";
  gen->add_option("--seed", gspec.seed)->capture_default_str();
  gen->add_option("--attributes", gspec.num_attributes, "Attribute count m (first is protected)")
      ->capture_default_str()->check(CLI::Range(2, 1000));
  gen->add_option("--rows", gspec.rows)->capture_default_str();
  gen->add_option("--bias", gspec.bias_strength, "Strength of the group effect on labels")
      ->capture_default_str();
  gen->add_option("--out-dir", gen_out, "Writes data.csv and schema.csv here")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a baseline ReLU classifier");
  DataArgs ta;
  std::string hidden = "8,8";
  TrainOptions topt;
  std::string train_out = "model.txt";
  add_data_args(train, ta, false);
  train->add_option("--hidden", hidden, "Comma-separated hidden widths")->capture_default_str();
  train->add_option("--epochs", topt.epochs)->capture_default_str();
  train->add_option("--lr", topt.learning_rate)->capture_default_str();
  train->add_option("--out", train_out, "Model file to write")->capture_default_str();

  // bounds
  auto* bounds = app.add_subcommand("bounds", "Interval and symbolic bounds over a neighbourhood");
  std::string b_model, b_schema, b_point;
  bounds->add_option("--model", b_model)->required()->check(CLI::ExistingFile);
  bounds->add_option("--schema", b_schema)->required()->check(CLI::ExistingFile);
  bounds->add_option("--point", b_point, "Comma-separated input x; the box is S(x)")->required();
  bool b_exact = false;
  bounds->add_flag("--exact", b_exact, "Also compute the exact output range by MILP");

  // repair
  auto* repair = app.add_subcommand("repair", "Calibrate, solve the repair MILP and certify");
  DataArgs ra;
  RepairConfig rcfg;
  std::string mode = "symbolic";
  std::string out_dir;
  std::string export_lp;
  add_data_args(repair, ra);
  repair->add_option("--mode", mode, "naive or symbolic")
      ->capture_default_str()->check(CLI::IsMember({"naive", "symbolic"}));
  repair->add_option("--out-dir", out_dir, "Output directory (default $FAIRREPAIR_OUT or ./fairrepair_out)");
  repair->add_option("--export-lp", export_lp, "Also write the repair MILP in CPLEX-LP format");
  repair->add_option("--iters", rcfg.calibration.max_iter, "Calibration iterations")->capture_default_str();
  repair->add_option("--cal-lr", rcfg.calibration.learning_rate, "Calibration step size")->capture_default_str();
  repair->add_option("--delta-max", rcfg.encode.delta_max, "Box on each weight change")->capture_default_str();
  repair->add_option("--margin", rcfg.encode.margin, "Strict-inequality margin")->capture_default_str();
  repair->add_option("--m-floor", rcfg.encode.m_floor, "Smallest big-M")->capture_default_str();
  repair->add_option("--time-limit", rcfg.limits.time_limit_seconds, "MILP wall-clock limit (s)")
      ->capture_default_str();
  repair->add_option("--samples", rcfg.metrics.input_samples, "Uniform inputs for IDI-S")->capture_default_str();
  repair->add_option("--k", rcfg.metrics.idi.k, "Draws per point for infinite neighbourhoods")
      ->capture_default_str();
  bool no_metrics = false;
  repair->add_flag("--no-metrics", no_metrics, "Skip IDI metrics (CUR is still certified)");

  // verify
  auto* verify = app.add_subcommand("verify", "Exactly certify each repair input");
  DataArgs va;
  bool require_fair = false;
  add_data_args(verify, va);
  verify->add_flag("--require-fair", require_fair, "Exit 1 if any input is certified unfair");

  // metrics
  auto* metrics = app.add_subcommand("metrics", "CUR, IDI-D and IDI-S of a model");
  DataArgs ma;
  MetricsOptions mopt;
  std::string m_mode = "enumerate";
  std::string m_out;
  add_data_args(metrics, ma);
  metrics->add_option("--mode", m_mode, "enumerate or sample")
      ->capture_default_str()->check(CLI::IsMember({"enumerate", "sample"}));
  metrics->add_option("--k", mopt.idi.k, "Draws per point in sample mode")->capture_default_str();
  metrics->add_option("--samples", mopt.input_samples, "Uniform inputs for IDI-S")->capture_default_str();
  metrics->add_option("--out", m_out, "Write the report as CSV");

  // export-lp
  auto* exp = app.add_subcommand("export-lp", "Write the repair MILP without solving it");
  DataArgs ea;
  std::string e_mode = "symbolic";
  std::string e_out;
  int e_iters = 200;
  add_data_args(exp, ea);
  exp->add_option("--mode", e_mode)->capture_default_str()->check(CLI::IsMember({"naive", "symbolic"}));
  exp->add_option("--iters", e_iters, "Calibration iterations before bounding")->capture_default_str();
  exp->add_option("--out", e_out, "LP file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const Dataset data = gen_synthetic_data(gspec);
      const fs::path dir = gen_out;
      fs::create_directories(dir);
      save_dataset(data, dir / "data.csv");
      save_schema(data.schema, dir / "schema.csv");
      std::cout << "wrote " << data.size() << " rows to " << (dir / "data.csv").string() << " and "
                << (dir / "schema.csv").string() << '\n';
    } else if (*train) {
      const Dataset data = load_dataset(ta.data, ta.schema);
      std::vector<Eigen::Index> dims{static_cast<Eigen::Index>(data.schema.size())};
      for (auto w : parse_widths(hidden)) dims.push_back(w);
      dims.push_back(1);
      topt.seed = ta.seed;
      const Mlp net = train_baseline(data, dims, topt);
      save_model(net, train_out);
      std::cout << "training accuracy " << accuracy(net, data.rows) << ", model written to "
                << train_out << '\n';
    } else if (*bounds) {
      const Mlp net = load_model(b_model);
      const AttributeSchema schema = load_schema(b_schema);
      const Vector x = parse_point(b_point);
      const Box box = neighborhood(schema, x);
      const auto prefix = net.feature_extractor();
      const ConcreteBounds cb = ibp_concrete(prefix, box);
      const SymbolicBounds sb = symbolic_bounds(prefix, box, cb);
      const IntervalVector sym = concretize(sb, box);
      std::cout << "box lower " << row_text(box.lower) << "\nbox upper " << row_text(box.upper) << '\n';
      for (std::size_t l = 0; l < cb.layers.size(); ++l) {
        std::cout << "layer " << l << " pre  [" << row_text(cb.layers[l].pre.lower) << "] .. ["
                  << row_text(cb.layers[l].pre.upper) << "]\n";
        std::cout << "layer " << l << " post [" << row_text(cb.layers[l].post.lower) << "] .. ["
                  << row_text(cb.layers[l].post.upper) << "]\n";
      }
      std::cout << "symbolic features [" << row_text(sym.lower) << "] .. [" << row_text(sym.upper) << "]\n";
      const Interval ibp = output_interval(net.final_layer(), cb.features);
      const Interval joint = symbolic_output_interval(net.final_layer(), sb, box);
      std::cout << "output ibp [" << ibp.lower << ", " << ibp.upper << "]\n";
      std::cout << "output symbolic [" << joint.lower << ", " << joint.upper << "]\n";
      if (b_exact) {
        VerifyOptions vo;
        vo.integer_dims = integer_mask(schema);
        const ExactRange r = exact_range(net, box, vo);
        std::cout << "output exact [" << r.min << ", " << r.max << "]\n";
      }
    } else if (*repair) {
      rcfg.model_path = ra.model;
      rcfg.data_path = ra.data;
      rcfg.schema_path = ra.schema;
      rcfg.output_dir = out_dir;
      rcfg.n_repair = ra.n_repair;
      rcfg.n_calib = ra.n_calib;
      rcfg.seed = ra.seed;
      rcfg.metrics.idi.seed = ra.seed;
      rcfg.mode = parse_repair_mode(mode);
      rcfg.compute_metrics = !no_metrics;
      if (!export_lp.empty()) rcfg.export_lp = export_lp;
      const RepairReport report = run_repair(rcfg);
      std::cout << report.to_table();
      const fs::path dir = out_dir.empty() ? default_output_dir() : fs::path(out_dir);
      std::cout << "repaired model, report.csv and report.txt written to " << dir.string() << '\n';
    } else if (*verify) {
      const Mlp net = load_model(va.model);
      Dataset data;
      const RepairSplit split = load_split(va, data);
      VerifyOptions vo;
      vo.integer_dims = integer_mask(data.schema);
      std::size_t unfair = 0;
      std::cout << "id,status,min,max,witness\n";
      for (std::size_t i = 0; i < split.repair.size(); ++i) {
        const Vector& x = split.repair.rows[i].x;
        auto cert = is_fair(net, x, neighborhood(data.schema, x), vo);
        cert.input_id = i;
        if (!cert.fair()) ++unfair;
        std::cout << i << ',' << to_string(cert.status) << ',' << cert.min << ',' << cert.max << ','
                  << (cert.witness ? row_text(*cert.witness) : "") << '\n';
      }
      std::cout << "certified unfair " << unfair << " of " << split.repair.size() << " (CUR "
                << static_cast<double>(unfair) / static_cast<double>(std::max<std::size_t>(1, split.repair.size()))
                << ")\n";
      if (require_fair && unfair > 0) return 1;
    } else if (*metrics) {
      const Mlp net = load_model(ma.model);
      Dataset data;
      const RepairSplit split = load_split(ma, data);
      mopt.idi.mode = m_mode == "sample" ? IdiMode::sample : IdiMode::enumerate;
      mopt.idi.seed = ma.seed;
      const MetricsReport r =
          compute_metrics(net, inputs_of(split.repair), inputs_of(data), data.schema, mopt);
      std::cout << r.to_table();
      if (!m_out.empty()) write_file(m_out, r.to_csv());
    } else if (*exp) {
      const Mlp net = load_model(ea.model);
      Dataset data;
      const RepairSplit split = load_split(ea, data);
      std::vector<Box> boxes;
      for (const auto& r : split.repair.rows) boxes.push_back(neighborhood(data.schema, r.x));
      CalibrationConfig cc;
      cc.max_iter = e_iters;
      const Mlp cal = calibrate(net, boxes, split.calibration.rows, cc).model;
      const auto prefix = cal.feature_extractor();
      MilpProblem problem;
      if (e_mode == "naive") {
        std::vector<IntervalVector> feats;
        for (const auto& b : boxes) feats.push_back(ibp_concrete(prefix, b).features);
        problem = build_naive(feats, cal.final_layer());
      } else {
        std::vector<SymbolicBounds> sbs;
        for (const auto& b : boxes) sbs.push_back(symbolic_bounds(prefix, b));
        problem = build_symbolic(sbs, boxes, cal.final_layer());
      }
      export_lp_file(problem, e_out);
      std::cout << "wrote " << problem.num_variables() << " variables and " << problem.num_constraints()
                << " constraints to " << e_out << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
