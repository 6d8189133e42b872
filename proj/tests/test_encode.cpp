#include "doctest.h"
#include "fixtures.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/branch_and_bound.hpp"
#include "fairrepair/encode.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"
#include "fairrepair/train.hpp"

#include <cmath>

using namespace fairrepair;
using fairrepair::testing::running_box;
using fairrepair::testing::running_example;

namespace {

std::vector<IntervalVector> running_features(std::size_t copies = 1) {
  IntervalVector f{Vector::Zero(2), Vector::Constant(2, 14.0)};
  return std::vector<IntervalVector>(copies, f);
}

MilpSolution solve_running_symbolic(const EncodeConfig& cfg = {}) {
  const Mlp net = running_example();
  const auto sb = symbolic_bounds(net.feature_extractor(), running_box());
  return solve_milp(build_symbolic({sb}, {running_box()}, net.final_layer(), cfg));
}

}  // namespace

TEST_CASE("naive encoding of the running example reaches 9/70") {
  const Mlp net = running_example();
  const MilpProblem p = build_naive(running_features(), net.final_layer());
  const MilpSolution sol = solve_milp(p);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(std::abs(sol.objective - 9.0 / 70.0) < 1e-6);
  const FinalLayerDelta delta = extract_delta(p, sol.values);
  CHECK(std::abs(delta.l1_norm() - sol.objective) < 1e-8);
  // Repaired weights must keep the output nonnegative at h = (14, 14).
  const Mlp repaired = net.apply_repair(delta);
  const double lowest = repaired.final_layer().apply(Vector::Constant(2, 14.0))(0);
  CHECK(lowest >= 0.0);
}

TEST_CASE("the split (9/140, 9/140) is feasible and optimal for the naive encoding") {
  const Mlp net = running_example();
  const MilpProblem p = build_naive(running_features(), net.final_layer());
  std::vector<double> x(p.num_variables(), 0.0);
  auto set = [&](const std::string& name, double v) { x[static_cast<std::size_t>(*p.find(name))] = v; };
  const double d = 9.0 / 140.0;
  // A margin of 1e-6 on LB needs a tiny extra step beyond the exact split.
  const double dd = d + 1e-6 / 28.0;
  set("dW_0", dd);
  set("dW_1", dd);
  set("t_0", dd);
  set("t_1", dd);
  const double w = -0.1 + dd;
  for (int j = 0; j < 2; ++j) {
    set("P_0_" + std::to_string(j), w * 14.0);
    set("Q_0_" + std::to_string(j), 0.0);
  }
  set("LB_0", 1.0 + 28.0 * w);
  set("UB_0", 1.0);
  set("Z_0", 1.0);
  CHECK(p.max_violation(x) < 1e-9);
  CHECK(std::abs(p.objective_value(x) - 9.0 / 70.0) < 1e-6);
}

TEST_CASE("symbolic encoding of the running example beats the naive one") {
  const MilpSolution sol = solve_running_symbolic();
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(std::abs(sol.objective - (0.2 - 2.0 / 19.6)) < 1e-6);
  CHECK(sol.objective < 9.0 / 70.0);
}

TEST_CASE("already fair final layer needs no change") {
  const Mlp net = running_example();
  AffineLayer fair = net.final_layer();
  fair.bias(0) = 5.0;  // 5 - 0.1 * 28 > 0
  const auto p = build_naive(running_features(), fair);
  const auto sol = solve_milp(p);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(sol.objective == doctest::Approx(0.0).epsilon(1e-9));
  const auto sb = symbolic_bounds(net.feature_extractor(), running_box());
  const auto sym = solve_milp(build_symbolic({sb}, {running_box()}, fair));
  REQUIRE(sym.status == MilpStatus::optimal);
  CHECK(std::abs(sym.objective) < 1e-9);
}

TEST_CASE("duplicated repair inputs do not change the optimum") {
  const Mlp net = running_example();
  const auto one = solve_milp(build_naive(running_features(1), net.final_layer()));
  const auto two = solve_milp(build_naive(running_features(2), net.final_layer()));
  CHECK(std::abs(one.objective - two.objective) < 1e-8);
}

TEST_CASE("big-M follows the delta box and clamps to the floor") {
  const Mlp net = running_example();
  EncodeConfig cfg;
  cfg.m_floor = 1.0;
  const double m = big_m(cfg, net.final_layer(), running_features());
  CHECK(m == doctest::Approx((1.0 + 10.0 + 2.0 * 10.1 * 14.0) * 1.1));
  EncodeConfig wider = cfg;
  wider.delta_max = 20.0;
  CHECK(big_m(wider, net.final_layer(), running_features()) > m);

  EncodeConfig flat;
  flat.delta_max = 0.0;
  IntervalVector zero{Vector::Zero(2), Vector::Zero(2)};
  AffineLayer tiny{Matrix::Zero(1, 2), Vector::Zero(1)};
  CHECK(big_m(flat, tiny, {zero}) == flat.m_floor);

  EncodeConfig open;
  open.delta_max = kInf;
  CHECK_THROWS_AS(big_m(open, net.final_layer(), running_features()), ConfigError);
}

TEST_CASE("strict margin is configurable and must be positive") {
  EncodeConfig cfg;
  CHECK(strict_margin(cfg) == 1e-6);
  cfg.margin = 1e-4;
  CHECK(strict_margin(cfg) == 1e-4);
  cfg.margin = 0.0;
  CHECK_THROWS_AS(strict_margin(cfg), ConfigError);
}

TEST_CASE("empty repair set and width mismatch are rejected") {
  const Mlp net = running_example();
  CHECK_THROWS_AS(build_naive({}, net.final_layer()), InputError);
  CHECK_THROWS_AS(build_symbolic({}, {}, net.final_layer()), InputError);
  SymbolicBounds wrong{Matrix::Zero(3, 2), Vector::Zero(3), Matrix::Zero(3, 2), Vector::Zero(3)};
  CHECK_THROWS_AS(build_symbolic({wrong}, {running_box()}, net.final_layer()), StructureError);
}

TEST_CASE("dual data block layout and soundness on sampled points") {
  const Mlp net = running_example();
  const auto prefix = net.feature_extractor();
  const auto sb = symbolic_bounds(prefix, running_box());
  const DualData dd = dual_data(sb, running_box());
  REQUIRE(dd.a.rows() == 12);
  REQUIRE(dd.a.cols() == 4);
  CHECK(dd.a.block(0, 0, 2, 2) == -Matrix::Identity(2, 2));
  CHECK(dd.a.block(2, 0, 2, 2) == Matrix::Identity(2, 2));
  CHECK(dd.a.block(4, 2, 2, 2) == -Matrix::Identity(2, 2));
  CHECK(dd.a.block(6, 2, 2, 2) == Matrix::Identity(2, 2));
  CHECK(dd.a.block(4, 0, 4, 2).isZero());
  CHECK(dd.a.block(8, 0, 2, 2) == -Matrix::Identity(2, 2));
  CHECK(dd.a.block(10, 0, 2, 2) == Matrix::Identity(2, 2));
  CHECK(dd.a.block(8, 2, 4, 2).isZero());
  CHECK(dd.d.tail(2) == Vector::Constant(2, 14.0));

  Rng rng(11);
  for (int s = 0; s < 2000; ++s) {
    Vector x{{rng.uniform(0, 8), rng.uniform(-1, 1)}};
    Vector p(4);
    p << prefix.forward(x), x;
    CHECK(((dd.a * p - dd.d).array() <= 1e-9).all());
  }
}

TEST_CASE("point box with one neuron reduces the dual to the exact value") {
  AffineLayer hidden{Matrix::Constant(1, 1, 2.0), Vector::Constant(1, -1.0)};
  AffineLayer out{Matrix::Constant(1, 1, -1.0), Vector::Constant(1, 0.5)};
  const Mlp net({hidden, out});
  const Box point = Box::point(Vector::Constant(1, 3.0));
  const auto sb = symbolic_bounds(net.feature_extractor(), point);
  const auto p = build_symbolic({sb}, {point}, net.final_layer());
  // Four lambda multipliers for a one-neuron, one-input polytope.
  CHECK(p.variables_with_role("lambda").size() == 6);
  // f(3) = 0.5 - 5 < 0 is already constant over the point box.
  const auto sol = solve_milp(p);
  REQUIRE(sol.status == MilpStatus::optimal);
  CHECK(std::abs(sol.objective) < 1e-9);
  const double lbhat = sol.values[static_cast<std::size_t>(*p.find("LBhat_0"))];
  const double ubhat = sol.values[static_cast<std::size_t>(*p.find("UBhat_0"))];
  CHECK(lbhat <= net.forward(point.lower) + 1e-7);
  CHECK(ubhat >= net.forward(point.lower) - 1e-7);

  // With the deltas pinned at zero, the best dual bound is f(3) exactly.
  MilpProblem q = p;
  q.add_constraint("pin_w", {{*q.find("dW_0"), 1.0}}, Sense::eq, 0.0);
  q.add_constraint("pin_b", {{*q.find("db"), 1.0}}, Sense::eq, 0.0);
  q.set_objective({{*q.find("LBhat_0"), -1.0}});
  const auto best = solve_lp(q);
  REQUIRE(best.status == LpStatus::optimal);
  CHECK(-best.objective == doctest::Approx(net.forward(point.lower)).epsilon(1e-9));
}

TEST_CASE("every role appears once per index") {
  const Mlp net = running_example();
  const auto sb = symbolic_bounds(net.feature_extractor(), running_box());
  const auto sym = build_symbolic({sb, sb, sb}, {running_box(), running_box(), running_box()},
                                  net.final_layer());
  CHECK(sym.variables_with_role("delta_w").size() == 2);
  CHECK(sym.variables_with_role("delta_b").size() == 1);
  CHECK(sym.variables_with_role("t").size() == 2);
  CHECK(sym.variables_with_role("s").size() == 1);
  CHECK(sym.variables_with_role("z").size() == 3);
  CHECK(sym.variables_with_role("lambda").size() == 3 * 12);
  CHECK(sym.variables_with_role("eta").size() == 3 * 12);
  CHECK(sym.variables_with_role("LBhat").size() == 3);
  CHECK(sym.variables_with_role("UBhat").size() == 3);
  const auto naive = build_naive(running_features(3), net.final_layer());
  CHECK(naive.variables_with_role("P").size() == 6);
  CHECK(naive.variables_with_role("Q").size() == 6);
  CHECK(naive.variables_with_role("LB").size() == 3);
  CHECK(naive.variables_with_role("UB").size() == 3);
  // The objective only touches the L1 surrogates.
  for (const auto& t : sym.objective()) {
    const auto& role = sym.variable(t.var).role;
    CHECK((role == "t" || role == "s"));
  }
}

TEST_CASE("symbolic optimum never exceeds naive optimum on seeded nets") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const Mlp net = init_mlp({3, 5, 4, 1}, seed);
    const auto prefix = net.feature_extractor();
    Rng rng(seed + 100);
    std::vector<IntervalVector> feats;
    std::vector<SymbolicBounds> sbs;
    std::vector<Box> boxes;
    for (int i = 0; i < 3; ++i) {
      Vector lo(3), hi(3);
      for (int k = 0; k < 3; ++k) {
        lo(k) = rng.uniform(-1, 0.5);
        hi(k) = lo(k) + (k == 0 ? 1.0 : 0.0);
      }
      Box box(lo, hi);
      feats.push_back(ibp_concrete(prefix, box).features);
      sbs.push_back(symbolic_bounds(prefix, box));
      boxes.push_back(box);
    }
    const auto naive = solve_milp(build_naive(feats, net.final_layer()));
    const auto sym = solve_milp(build_symbolic(sbs, boxes, net.final_layer()));
    REQUIRE(naive.status == MilpStatus::optimal);
    REQUIRE(sym.status == MilpStatus::optimal);
    CHECK(sym.objective <= naive.objective + 1e-7);
  }
}
