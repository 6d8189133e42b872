#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/branch_and_bound.hpp"
#include "fairrepair/encode.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/lp_format.hpp"
#include "fairrepair/simplex.hpp"
#include "fairrepair/train.hpp"

#include <cmath>
#include <cstring>

using namespace fairrepair;
using namespace fairrepair::testing;

TEST_CASE("single variable bounded below") {
  MilpProblem p;
  const int x = p.add_continuous("x", -kInf, kInf);
  p.add_constraint("c", {{x, 1.0}}, Sense::ge, 3.0);
  p.set_objective({{x, 1.0}});
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.values[0] == doctest::Approx(3.0));
  CHECK(s.objective == doctest::Approx(3.0));
  CHECK(s.duals[0] == doctest::Approx(1.0));
  const MilpSolution m = solve_milp(p);
  CHECK(m.status == MilpStatus::optimal);
  CHECK(m.nodes == 1);
}

TEST_CASE("infeasible and unbounded programs are classified") {
  MilpProblem inf;
  const int x = inf.add_continuous("x", 0.0, 1.0);
  inf.add_constraint("c", {{x, 1.0}}, Sense::ge, 2.0);
  inf.set_objective({{x, 1.0}});
  CHECK(solve_lp(inf).status == LpStatus::infeasible);
  CHECK(solve_milp(inf).status == MilpStatus::infeasible);

  MilpProblem unb;
  const int y = unb.add_continuous("y", -kInf, kInf);
  const int z = unb.add_continuous("z", 0.0, kInf);
  unb.add_constraint("c", {{y, 1.0}, {z, -1.0}}, Sense::le, 1.0);
  unb.set_objective({{y, -1.0}});
  CHECK(solve_lp(unb).status == LpStatus::unbounded);
  CHECK(solve_milp(unb).status == MilpStatus::unbounded);

  MilpProblem bin;
  const int b = bin.add_binary("b");
  bin.add_constraint("c", {{b, 1.0}}, Sense::eq, 0.5);
  CHECK(solve_milp(bin).status == MilpStatus::infeasible);
}

TEST_CASE("hand polytope primal and its dual reach -1.96") {
  // p = (h1, h2, x1, x2); A p <= D.
  Matrix a(8, 4);
  a << -1, 0, 0, 0,        //
      0, -1, 0, 0,         //
      1, 0, -0.7, -4.2,    //
      0, 1, -0.7, 4.2,     //
      0, 0, -1, 0,         //
      0, 0, 0, -1,         //
      0, 0, 1, 0,          //
      0, 0, 0, 1;
  Vector d(8);
  d << 0, 0, 4.2, 4.2, 0, 1, 8, 1;
  const Vector c{{-0.1, -0.1, 0.0, 0.0}};

  MilpProblem primal;
  for (const char* n : {"h1", "h2", "x1", "x2"}) primal.add_continuous(n, -kInf, kInf);
  for (int k = 0; k < 8; ++k) {
    std::vector<Term> t;
    for (int j = 0; j < 4; ++j) {
      if (a(k, j) != 0.0) t.push_back({j, a(k, j)});
    }
    primal.add_constraint("r" + std::to_string(k), t, Sense::le, d(k));
  }
  primal.set_objective({{0, -0.1}, {1, -0.1}});

  // max -D.lambda  s.t.  A^T lambda = -c, lambda >= 0, written as a minimum.
  MilpProblem dual;
  for (int k = 0; k < 8; ++k) dual.add_continuous("l" + std::to_string(k), 0.0, kInf);
  for (int j = 0; j < 4; ++j) {
    std::vector<Term> t;
    for (int k = 0; k < 8; ++k) {
      if (a(k, j) != 0.0) t.push_back({k, a(k, j)});
    }
    dual.add_constraint("c" + std::to_string(j), t, Sense::eq, -c(j));
  }
  std::vector<Term> obj;
  for (int k = 0; k < 8; ++k) obj.push_back({k, d(k)});
  dual.set_objective(obj);

  const LpSolution ps = solve_lp(primal);
  const LpSolution ds = solve_lp(dual);
  REQUIRE(ps.status == LpStatus::optimal);
  REQUIRE(ds.status == LpStatus::optimal);
  CHECK(std::abs(ps.objective + 1.96) < 1e-9);
  CHECK(std::abs(-ds.objective + 1.96) < 1e-9);
  CHECK(1.0 + ps.objective == doctest::Approx(-0.96));
}

TEST_CASE("strong duality on seeded bounded programs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LpPair pair = random_lp_pair(seed);
    const LpSolution ps = solve_lp(pair.primal);
    const LpSolution ds = solve_lp(pair.dual);
    REQUIRE(ps.status == LpStatus::optimal);
    REQUIRE(ds.status == LpStatus::optimal);
    const double opt = ps.objective;
    CHECK(std::abs(opt + ds.objective) < 1e-6 * (1.0 + std::abs(opt)));
    CHECK(pair.primal.max_violation(ps.values) < 1e-8);
    // The reported row duals certify the same value: c.x = y.b + bound terms.
    double certified = 0.0;
    for (std::size_t i = 0; i < pair.primal.num_constraints(); ++i) {
      certified += ps.duals[i] * pair.primal.constraints()[i].rhs;
    }
    for (std::size_t j = 0; j < pair.primal.num_variables(); ++j) {
      const auto& v = pair.primal.variables()[j];
      const double rc = ps.reduced_costs[j];
      certified += rc > 0 ? rc * v.lower : rc * v.upper;
    }
    CHECK(std::abs(certified - opt) < 1e-6 * (1.0 + std::abs(opt)));
  }
}

TEST_CASE("branch and bound matches enumeration of every binary assignment") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const int nb = 1 + static_cast<int>(seed % 12);
    const MilpProblem p = random_milp(seed, nb);
    const double expected = enumerate_binaries(p);
    const MilpSolution s = solve_milp(p);
    if (!std::isfinite(expected)) {
      CHECK(s.status == MilpStatus::infeasible);
      continue;
    }
    REQUIRE(s.status == MilpStatus::optimal);
    CHECK(std::abs(s.objective - expected) < 1e-7);
    CHECK(p.max_violation(s.values) < 1e-8);
    for (int b : p.binaries()) {
      const double v = s.values[static_cast<std::size_t>(b)];
      CHECK((v == 0.0 || v == 1.0));
    }
  }
}

TEST_CASE("solving is deterministic down to the bytes") {
  const MilpProblem p = random_milp(77, 10);
  const MilpSolution a = solve_milp(p);
  const MilpSolution b = solve_milp(p);
  CHECK(a.nodes == b.nodes);
  REQUIRE(a.values.size() == b.values.size());
  CHECK(std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0);
}

TEST_CASE("LP text round trip preserves the problem and its optimum") {
  const MilpProblem p = random_milp(5, 6);
  const std::string text = lp_to_text(p);
  const MilpProblem q = lp_from_text(text);
  CHECK(q.num_variables() <= p.num_variables());
  CHECK(q.num_constraints() == p.num_constraints());
  CHECK(q.binaries().size() == p.binaries().size());
  CHECK(lp_to_text(q).size() > 0);
  const MilpSolution sp = solve_milp(p);
  const MilpSolution sq = solve_milp(q);
  REQUIRE(sp.status == MilpStatus::optimal);
  REQUIRE(sq.status == MilpStatus::optimal);
  CHECK(std::abs(sp.objective - sq.objective) < 1e-9);

  MilpProblem one;
  const int x = one.add_continuous("x", 1.5, 4.0);
  const int z = one.add_binary("z");
  one.add_constraint("c", {{x, 1.0}, {z, 2.0}}, Sense::ge, 3.0);
  one.set_objective({{x, 1.0}, {z, 0.25}});
  const std::string t1 = lp_to_text(one);
  CHECK(lp_to_text(lp_from_text(t1)) == t1);
  const auto bin = t1.find("Binaries");
  REQUIRE(bin != std::string::npos);
  CHECK(t1.find(" z", bin) != std::string::npos);
  CHECK(t1.find(" z", t1.find(" z", bin) + 1) == std::string::npos);
}

TEST_CASE("LP reader handles maximisation and rejects general integers") {
  const MilpProblem p = lp_from_text(
      "Maximize\n obj: x + 2 y\nSubject To\n c1: x + y <= 4\nBounds\n 0 <= x <= 3\n y <= 1\nEnd\n");
  const LpSolution s = solve_lp(p);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.objective == doctest::Approx(-5.0));
  CHECK_THROWS_AS(lp_from_text("Minimize\n obj: x\nSubject To\n c: x >= 1\nGenerals\n x\nEnd\n"),
                  ParseError);
}

TEST_CASE("problem validation catches malformed models") {
  MilpProblem p;
  const int x = p.add_continuous("x", 0.0, 1.0);
  CHECK_THROWS(p.add_continuous("x", 0.0, 1.0));
  CHECK_THROWS(p.add_constraint("bad", {{x + 5, 1.0}}, Sense::le, 1.0));
  CHECK_THROWS(p.add_continuous("y", 2.0, 1.0));
}

TEST_CASE("incumbents of big-M repair problems pass the residual audit") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    Mlp net = init_mlp({3, 6, 6, 1}, 40 + seed);
    Rng rng(seed);
    std::vector<Box> boxes;
    std::vector<IntervalVector> feats;
    for (int i = 0; i < 4; ++i) {
      const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
      boxes.emplace_back(Vector{{0.0, a, b}}, Vector{{1.0, a, b}});
      feats.push_back(ibp_concrete(net.feature_extractor(), boxes.back()).features);
    }
    const MilpProblem p = build_naive(feats, net.final_layer());
    const MilpSolution s = solve_milp(p);
    REQUIRE(s.status == MilpStatus::optimal);
    CHECK(p.max_violation(s.values) < 1e-8);
    CHECK(std::abs(s.objective - enumerate_binaries(p)) < 1e-7);
  }
}
