#include "fairrepair/verify.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"
#include "text_util.hpp"

#include <cmath>
#include <sstream>

namespace fairrepair {

namespace {

struct RangeMilp {
  MilpProblem problem;
  std::vector<int> inputs;
};

// Tjeng-style encoding of the network over the box. The objective is
// sign * (w . h) without the output bias.
RangeMilp build_range_milp(const Mlp& net, const Box& box, const std::vector<bool>& integer_dims,
                           double sign) {
  const auto [prefix, head] = net.split();
  const ConcreteBounds cb = ibp_concrete(prefix, box);
  RangeMilp out;
  auto& p = out.problem;
  const auto m = box.dim();
  for (Eigen::Index k = 0; k < m; ++k) {
    const bool integral = !integer_dims.empty() && integer_dims[static_cast<std::size_t>(k)];
    double lo = box.lower(k), hi = box.upper(k);
    if (integral && lo < hi) {
      lo = std::ceil(lo - 1e-9);
      hi = std::floor(hi + 1e-9);
      if (lo > hi) throw InputError("integer dimension " + std::to_string(k) + " has no integer in its range");
    }
    const int xv = p.add_continuous("x_" + std::to_string(k), lo, hi, "x");
    out.inputs.push_back(xv);
    if (integral && lo < hi) {
      // x = lo + sum_b 2^b u_b, with the upper bound kept on x.
      const auto span = static_cast<long long>(hi - lo);
      std::vector<Term> terms{{xv, 1.0}};
      double weight = 1.0;
      for (int bit = 0; (1LL << bit) <= span; ++bit, weight *= 2.0) {
        const int u = p.add_binary("xbit_" + std::to_string(k) + "_" + std::to_string(bit), "xbit");
        terms.push_back({u, -weight});
      }
      p.add_constraint("xint_" + std::to_string(k), std::move(terms), Sense::eq, lo);
    }
  }

  // Each neuron value is an affine expression over MILP variables plus a constant.
  struct Affine {
    std::vector<Term> terms;
    double constant = 0.0;
  };
  std::vector<Affine> current;
  for (int xv : out.inputs) current.push_back({{{xv, 1.0}}, 0.0});

  const auto& layers = prefix.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& layer = layers[l];
    std::vector<Affine> next;
    for (Eigen::Index r = 0; r < layer.output_dim(); ++r) {
      Affine pre{{}, layer.bias(r)};
      for (Eigen::Index c = 0; c < layer.input_dim(); ++c) {
        const double w = layer.weight(r, c);
        if (w == 0.0) continue;
        const auto& in = current[static_cast<std::size_t>(c)];
        for (const auto& t : in.terms) pre.terms.push_back({t.var, w * t.coeff});
        pre.constant += w * in.constant;
      }
      const double lo = cb.layers[l].pre.lower(r), hi = cb.layers[l].pre.upper(r);
      const std::string tag = std::to_string(l) + "_" + std::to_string(r);
      if (hi <= 0.0) {
        next.push_back({{}, 0.0});
        continue;
      }
      const int y = p.add_continuous("y_" + tag, std::max(0.0, lo), hi, "y");
      std::vector<Term> diff = pre.terms;  // pre - y
      diff.push_back({y, -1.0});
      if (lo >= 0.0) {
        p.add_constraint("act_" + tag, std::move(diff), Sense::eq, -pre.constant);
      } else {
        const int a = p.add_binary("a_" + tag, "a");
        // y >= pre
        p.add_constraint("ge_" + tag, diff, Sense::le, -pre.constant);
        // y <= pre - lo (1 - a)
        std::vector<Term> up = diff;
        up.push_back({a, lo});
        p.add_constraint("le_pre_" + tag, std::move(up), Sense::ge, lo - pre.constant);
        // y <= hi a
        p.add_constraint("le_on_" + tag, {{y, 1.0}, {a, -hi}}, Sense::le, 0.0);
      }
      next.push_back({{{y, 1.0}}, 0.0});
    }
    current = std::move(next);
  }

  std::vector<Term> obj;
  for (Eigen::Index j = 0; j < head.input_dim(); ++j) {
    const double w = head.weight(0, j);
    for (const auto& t : current[static_cast<std::size_t>(j)].terms) {
      obj.push_back({t.var, sign * w * t.coeff});
    }
  }
  p.set_objective(std::move(obj));
  return out;
}

Vector optimizer_point(const RangeMilp& rm, const MilpSolution& sol, const Box& box,
                       const std::vector<bool>& integer_dims) {
  Vector x(box.dim());
  for (Eigen::Index k = 0; k < box.dim(); ++k) {
    double v = sol.values[static_cast<std::size_t>(rm.inputs[static_cast<std::size_t>(k)])];
    if (!integer_dims.empty() && integer_dims[static_cast<std::size_t>(k)] &&
        box.lower(k) < box.upper(k)) {
      v = std::round(v);
    }
    x(k) = std::clamp(v, box.lower(k), box.upper(k));
  }
  return x;
}

// Returns (value at optimizer, optimizer, nodes). sign=+1 minimises, -1 maximises.
std::tuple<double, Vector, long> solve_side(const Mlp& net, const Box& box,
                                            const VerifyOptions& opts, double sign) {
  if (box.lower == box.upper) return {net.forward(box.lower), box.lower, 0};
  const RangeMilp rm = build_range_milp(net, box, opts.integer_dims, sign);
  const MilpSolution sol = solve_milp(rm.problem, opts.limits);
  if (sol.status == MilpStatus::infeasible || sol.status == MilpStatus::unbounded) {
    throw SolverError(std::string("exact range MILP reported ") + to_string(sol.status));
  }
  if (sol.status == MilpStatus::timeout) {
    std::ostringstream msg;
    msg << "exact range MILP timed out after " << sol.nodes << " nodes; bound "
        << sign * sol.best_bound + net.final_layer().bias(0);
    if (sol.has_incumbent()) msg << ", incumbent " << sign * sol.objective + net.final_layer().bias(0);
    throw SolverError(msg.str());
  }
  Vector x = optimizer_point(rm, sol, box, opts.integer_dims);
  return {net.forward(x), std::move(x), sol.nodes};
}

void check_box(const Mlp& net, const Box& box, const VerifyOptions& opts) {
  if (box.dim() != net.input_dim()) throw InputError("box width does not match the network input");
  if (!box.lower.allFinite() || !box.upper.allFinite()) throw InputError("box must be finite");
  if (!opts.integer_dims.empty() &&
      opts.integer_dims.size() != static_cast<std::size_t>(box.dim())) {
    throw InputError("integer mask width does not match the box");
  }
}

}  // namespace

MilpProblem build_range_problem(const Mlp& net, const Box& box, const VerifyOptions& opts,
                                bool maximize) {
  check_box(net, box, opts);
  return build_range_milp(net, box, opts.integer_dims, maximize ? -1.0 : 1.0).problem;
}

ExactRange exact_range(const Mlp& net, const Box& box, const VerifyOptions& opts) {
  check_box(net, box, opts);
  ExactRange r;
  long n1 = 0, n2 = 0;
  std::tie(r.min, r.argmin, n1) = solve_side(net, box, opts, 1.0);
  std::tie(r.max, r.argmax, n2) = solve_side(net, box, opts, -1.0);
  r.nodes = n1 + n2;
  return r;
}

std::vector<bool> integer_mask(const AttributeSchema& schema) {
  std::vector<bool> mask(schema.size());
  for (std::size_t j = 0; j < schema.size(); ++j) {
    mask[j] = schema[j].type == ValueType::integer;
  }
  return mask;
}

const char* to_string(FairStatus s) {
  return s == FairStatus::certified_fair ? "certified-fair" : "certified-unfair";
}

FairnessCertificate is_fair(const Mlp& net, const Vector& x, const Box& box,
                            const VerifyOptions& opts, bool full_range) {
  check_box(net, box, opts);
  if (!box.contains(x, 1e-12)) throw InputError("input lies outside its box");
  FairnessCertificate cert;
  const bool positive = classify(net.forward(x));
  if (full_range) {
    const ExactRange r = exact_range(net, box, opts);
    cert.min = r.min;
    cert.max = r.max;
    const bool fair = r.min >= 0.0 || r.max < 0.0;
    cert.status = fair ? FairStatus::certified_fair : FairStatus::certified_unfair;
    if (!fair) cert.witness = positive ? r.argmin : r.argmax;
    return cert;
  }

  const auto prefix = net.feature_extractor();
  const Interval bound = symbolic_output_interval(net.final_layer(), symbolic_bounds(prefix, box), box);
  cert.exact = false;
  cert.min = bound.lower;
  cert.max = bound.upper;
  if ((positive && bound.lower >= 0.0) || (!positive && bound.upper < 0.0)) return cert;

  const auto [value, point, nodes] = solve_side(net, box, opts, positive ? 1.0 : -1.0);
  (positive ? cert.min : cert.max) = value;
  const bool fair = positive ? value >= 0.0 : value < 0.0;
  if (!fair) {
    cert.status = FairStatus::certified_unfair;
    cert.witness = point;
  }
  return cert;
}

BruteForceResult brute_force_fair(const Mlp& net, const AttributeSchema& schema, const Vector& x) {
  BruteForceResult out;
  const bool positive = classify(net.forward(x));
  std::vector<std::vector<double>> axes;
  if (auto grid = neighborhood_grid(schema, x)) {
    axes = std::move(*grid);
  } else {
    out.certificate = false;
    const Box box = neighborhood(schema, x);
    axes.resize(schema.size());
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const double lo = box.lower(j), hi = box.upper(j);
      if (lo == hi) {
        axes[j] = {lo};
      } else if (schema[j].type == ValueType::integer) {
        for (double v = std::ceil(lo); v <= hi; v += 1.0) axes[j].push_back(v);
        if (axes[j].empty()) axes[j] = {x(j)};
      } else {
        for (std::size_t s = 0; s < kFallbackGridPoints; ++s) {
          axes[j].push_back(lo + (hi - lo) * static_cast<double>(s) /
                                     static_cast<double>(kFallbackGridPoints - 1));
        }
      }
    }
  }
  std::vector<std::size_t> pos(axes.size(), 0);
  Vector p(x.size());
  while (true) {
    for (std::size_t j = 0; j < axes.size(); ++j) p(j) = axes[j][pos[j]];
    ++out.points;
    if (classify(net.forward(p)) != positive) {
      out.fair = false;
      return out;
    }
    std::size_t j = axes.size();
    while (j-- > 0) {
      if (++pos[j] < axes[j].size()) break;
      pos[j] = 0;
    }
    if (j == static_cast<std::size_t>(-1)) break;
  }
  return out;
}

double cur(const Mlp& net, const std::vector<Vector>& points, const AttributeSchema& schema,
           const VerifyOptions& opts) {
  if (points.empty()) throw InputError("cur needs at least one point");
  VerifyOptions o = opts;
  if (o.integer_dims.empty()) o.integer_dims = integer_mask(schema);
  std::size_t unfair = 0;
  for (const auto& x : points) {
    if (!is_fair(net, x, neighborhood(schema, x), o, false).fair()) ++unfair;
  }
  return static_cast<double>(unfair) / static_cast<double>(points.size());
}

namespace {

bool sampled_unfair(const Mlp& net, const AttributeSchema& schema, const Vector& x,
                    std::size_t k, Rng& rng) {
  const bool positive = classify(net.forward(x));
  const auto grid = neighborhood_grid(schema, x);
  const Box box = neighborhood(schema, x);
  Vector p(x.size());
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t j = 0; j < schema.size(); ++j) {
      if (grid) {
        const auto& axis = (*grid)[j];
        p(j) = axis[rng.index(axis.size())];
      } else if (schema[j].type == ValueType::integer && box.lower(j) < box.upper(j)) {
        const double lo = std::ceil(box.lower(j)), hi = std::floor(box.upper(j));
        p(j) = lo > hi ? x(j) : lo + static_cast<double>(rng.index(static_cast<std::uint64_t>(hi - lo) + 1));
      } else {
        p(j) = rng.uniform(box.lower(j), box.upper(j));
      }
    }
    if (classify(net.forward(p)) != positive) return true;
  }
  return false;
}

}  // namespace

double idi_rate(const Mlp& net, const std::vector<Vector>& points, const AttributeSchema& schema,
                const IdiOptions& opts) {
  if (points.empty()) throw InputError("idi_rate needs at least one point");
  if (opts.mode == IdiMode::sample && opts.k == 0) throw ConfigError("sample count k must be positive");
  Rng rng(opts.seed);
  std::size_t flagged = 0;
  for (const auto& x : points) {
    bool unfair = false;
    if (opts.mode == IdiMode::enumerate && neighborhood_grid(schema, x)) {
      unfair = !brute_force_fair(net, schema, x).fair;
    } else {
      unfair = sampled_unfair(net, schema, x, std::max<std::size_t>(opts.k, 1), rng);
    }
    if (unfair) ++flagged;
  }
  return static_cast<double>(flagged) / static_cast<double>(points.size());
}

std::vector<Vector> sample_input_space(const AttributeSchema& schema, std::size_t n,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> out;
  out.reserve(n);
  for (std::size_t s = 0; s < n; ++s) {
    Vector p(static_cast<Eigen::Index>(schema.size()));
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const auto& a = schema[j];
      if (a.type == ValueType::integer) {
        const double lo = std::ceil(a.lo), hi = std::floor(a.hi);
        p(j) = lo + static_cast<double>(rng.index(static_cast<std::uint64_t>(hi - lo) + 1));
      } else {
        p(j) = rng.uniform(a.lo, a.hi);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string MetricsReport::to_csv() const {
  std::ostringstream out;
  out << "metric,value\n";
  out << "cur," << detail::format_real(cur) << '\n';
  out << "idi_d," << detail::format_real(idi_d) << '\n';
  out << "idi_s," << detail::format_real(idi_s) << '\n';
  out << "repair_count," << repair_count << '\n';
  out << "dataset_count," << dataset_count << '\n';
  out << "sample_count," << sample_count << '\n';
  out << "k," << k << '\n';
  out << "seed," << seed << '\n';
  out << "mode," << (mode == IdiMode::enumerate ? "enumerate" : "sample") << '\n';
  return out.str();
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(2);
  out << "CUR    " << 100.0 * cur << "%  (" << repair_count << " repair inputs)\n";
  out << "IDI-D  " << 100.0 * idi_d << "%  (" << dataset_count << " dataset points)\n";
  out << "IDI-S  " << 100.0 * idi_s << "%  (" << sample_count << " sampled points)\n";
  out << "mode " << (mode == IdiMode::enumerate ? "enumerate" : "sample") << ", k " << k
      << ", seed " << seed << '\n';
  return out.str();
}

MetricsReport compute_metrics(const Mlp& net, const std::vector<Vector>& repair_points,
                              const std::vector<Vector>& dataset_points,
                              const AttributeSchema& schema, const MetricsOptions& opts) {
  MetricsReport r;
  r.repair_count = repair_points.size();
  r.dataset_count = dataset_points.size();
  r.sample_count = opts.input_samples;
  r.k = opts.idi.k;
  r.seed = opts.idi.seed;
  r.mode = opts.idi.mode;
  if (!repair_points.empty()) r.cur = cur(net, repair_points, schema, opts.verify);
  if (!dataset_points.empty()) r.idi_d = idi_rate(net, dataset_points, schema, opts.idi);
  if (opts.input_samples > 0) {
    const auto samples = sample_input_space(schema, opts.input_samples, opts.idi.seed);
    r.idi_s = idi_rate(net, samples, schema, opts.idi);
  }
  return r;
}

}  // namespace fairrepair
