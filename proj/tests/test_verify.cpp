#include "doctest.h"
#include "fixtures.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"
#include "fairrepair/train.hpp"
#include "fairrepair/verify.hpp"

#include <cmath>

using namespace fairrepair;
using namespace fairrepair::testing;

namespace {

// Final weights of the running example moved by +9/140 each.
Mlp repaired_running_example() {
  const double w = -5.0 / 140.0;
  return running_example().apply_repair({Vector::Constant(2, w + 0.1), 0.0});
}

Mlp constant_net(double value) {
  const Mlp base = init_mlp({3, 4, 1}, 1);
  AffineLayer head{Matrix::Zero(1, 4), Vector::Constant(1, value)};
  return Mlp(base.feature_extractor(), head);
}

AttributeSchema small_integer_schema() {
  return AttributeSchema({{"g", AttributeKind::sensitive, 0, 2, ValueType::integer, 0},
                          {"a", AttributeKind::nonsensitive, 0, 4, ValueType::integer, 1},
                          {"b", AttributeKind::nonsensitive, 0, 4, ValueType::integer, 0}});
}

Vector random_point(const AttributeSchema& s, Rng& rng) {
  Vector x(static_cast<Eigen::Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    x(j) = s[j].lo + static_cast<double>(rng.index(static_cast<std::uint64_t>(s[j].hi - s[j].lo) + 1));
  }
  return x;
}

}  // namespace

TEST_CASE("exact range of the running example") {
  const ExactRange r = exact_range(running_example(), running_box());
  CHECK(r.min == doctest::Approx(-0.6).epsilon(1e-9));
  CHECK(r.max == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(running_example().forward(r.argmin) == doctest::Approx(r.min));
  CHECK(running_example().forward(r.argmax) == doctest::Approx(r.max));
  CHECK(r.argmin(0) == doctest::Approx(8.0));
}

TEST_CASE("point box gives the forward value") {
  const ExactRange r = exact_range(running_example(), Box::point(Vector{{4.0, 0.0}}));
  CHECK(r.min == doctest::Approx(0.2));
  CHECK(r.max == doctest::Approx(0.2));
}

TEST_CASE("running example input is an individual discriminatory instance") {
  const Vector x{{4.0, 0.0}};
  const FairnessCertificate c = is_fair(running_example(), x, running_box());
  CHECK_FALSE(c.fair());
  CHECK(c.status == FairStatus::certified_unfair);
  REQUIRE(c.witness);
  CHECK(running_box().contains(*c.witness, 1e-9));
  CHECK(running_example().forward(*c.witness) < 0.0);
  CHECK(std::string(to_string(c.status)) == "certified-unfair");
  // One-sided mode reaches the same verdict.
  CHECK_FALSE(is_fair(running_example(), x, running_box(), {}, false).fair());
}

TEST_CASE("repaired running example is certified fair with minimum 3/7") {
  const Mlp net = repaired_running_example();
  const FairnessCertificate c = is_fair(net, Vector{{4.0, 0.0}}, running_box());
  CHECK(c.fair());
  CHECK(c.min == doctest::Approx(3.0 / 7.0).epsilon(1e-9));
  CHECK_FALSE(c.witness);
  CHECK(cur(net, {Vector{{4.0, 0.0}}, Vector{{1.0, 0.0}}}, running_schema()) == 0.0);
}

TEST_CASE("constant networks are fair everywhere") {
  const Mlp net = constant_net(0.7);
  const AttributeSchema s = small_integer_schema();
  Rng rng(3);
  std::vector<Vector> pts;
  for (int i = 0; i < 5; ++i) pts.push_back(random_point(s, rng));
  CHECK(is_fair(net, pts[0], neighborhood(s, pts[0])).fair());
  CHECK(cur(net, pts, s) == 0.0);
  CHECK(idi_rate(net, pts, s) == 0.0);
}

TEST_CASE("brute force over integer grids") {
  const AttributeSchema s = running_schema();
  const BruteForceResult r = brute_force_fair(running_example(), s, Vector{{4.0, 0.0}});
  CHECK_FALSE(r.fair);
  // Stops at the first flip; a fair verdict visits the whole grid.
  CHECK(r.points <= 27);
  const BruteForceResult ok = brute_force_fair(repaired_running_example(), s, Vector{{4.0, 0.0}});
  CHECK(ok.fair);
  CHECK(ok.points == 27);
}

TEST_CASE("exact verification agrees with enumeration on finite neighbourhoods") {
  const AttributeSchema s = small_integer_schema();
  VerifyOptions vo;
  vo.integer_dims = integer_mask(s);
  int unfair = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Mlp net = init_mlp({3, 5, 4, 1}, seed);
    Rng rng(seed + 1000);
    const Vector x = random_point(s, rng);
    // Centre the output near zero so both verdicts occur.
    const double shift = -net.forward(x) + rng.uniform(-0.3, 0.3);
    net = net.apply_repair({Vector::Zero(net.feature_dim()), shift});
    const bool brute = brute_force_fair(net, s, x).fair;
    const bool exact = is_fair(net, x, neighborhood(s, x), vo).fair();
    CHECK(brute == exact);
    if (!exact) ++unfair;
  }
  CHECK(unfair > 0);
  CHECK(unfair < 50);
}

TEST_CASE("exact range nests inside symbolic and interval ranges") {
  Rng rng(8);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Mlp net = init_mlp({3, 5, 4, 1}, seed);
    Vector lo(3), hi(3);
    for (int j = 0; j < 3; ++j) {
      lo(j) = rng.uniform(-1.0, 1.0);
      hi(j) = lo(j) + rng.uniform(0.1, 1.0);
    }
    const Box box(lo, hi);
    const auto prefix = net.feature_extractor();
    const ConcreteBounds cb = ibp_concrete(prefix, box);
    const Interval ibp = output_interval(net.final_layer(), cb.features);
    const Interval sym = symbolic_output_interval(net.final_layer(), symbolic_bounds(prefix, box, cb), box);
    const ExactRange ex = exact_range(net, box);
    CHECK(ibp.lower <= sym.lower + 1e-9);
    CHECK(sym.lower <= ex.min + 1e-7);
    CHECK(ex.max <= sym.upper + 1e-7);
    CHECK(sym.upper <= ibp.upper + 1e-9);
    CHECK(box.contains(ex.argmin, 1e-9));
  }
}

TEST_CASE("enlarging a box never removes a violation") {
  Rng rng(12);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Mlp net = init_mlp({2, 4, 1}, seed + 50);
    const Vector x{{rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7)}};
    net = net.apply_repair({Vector::Zero(net.feature_dim()), -net.forward(x) + 0.05});
    const Box small(x.array() - 0.1, x.array() + 0.1);
    const Box large(x.array() - 0.3, x.array() + 0.3);
    if (!is_fair(net, x, small).fair()) {
      ++checked;
      CHECK_FALSE(is_fair(net, x, large).fair());
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("sampled IDI rate is deterministic and never exceeds enumeration") {
  const AttributeSchema s = small_integer_schema();
  Rng rng(21);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Mlp net = init_mlp({3, 6, 1}, seed + 300);
    std::vector<Vector> pts;
    for (int i = 0; i < 20; ++i) pts.push_back(random_point(s, rng));
    net = net.apply_repair({Vector::Zero(net.feature_dim()), -net.forward(pts[0])});
    IdiOptions sample{IdiMode::sample, 3, 7};
    const double a = idi_rate(net, pts, s, sample);
    const double b = idi_rate(net, pts, s, sample);
    CHECK(a == b);
    CHECK(a <= idi_rate(net, pts, s) + 1e-12);
  }
}

TEST_CASE("biased synthetic model has a positive certified unfair rate") {
  const SyntheticInstance inst = gen_synthetic(3, 6, 8, 1.0);
  const RepairSplit split = split_repair_sets(inst.data, 10, 100, 3);
  VerifyOptions vo;
  CHECK(cur(inst.model, inputs_of(split.repair), inst.data.schema, vo) > 0.0);
}

TEST_CASE("metrics report is reproducible and well formed") {
  const SyntheticInstance inst = gen_synthetic(3, 6, 8, 1.0);
  const RepairSplit split = split_repair_sets(inst.data, 10, 100, 3);
  MetricsOptions mo;
  mo.input_samples = 500;
  mo.idi.seed = 7;
  const MetricsReport a = compute_metrics(inst.model, inputs_of(split.repair), inputs_of(inst.data),
                                          inst.data.schema, mo);
  const MetricsReport b = compute_metrics(inst.model, inputs_of(split.repair), inputs_of(inst.data),
                                          inst.data.schema, mo);
  CHECK(a.cur == b.cur);
  CHECK(a.idi_d == b.idi_d);
  CHECK(a.idi_s == b.idi_s);
  CHECK(a.sample_count == 500);
  CHECK(a.to_csv().find("idi_s") != std::string::npos);
}

TEST_CASE("verification input checks") {
  CHECK_THROWS_AS(exact_range(running_example(), Box::point(Vector::Zero(3))), InputError);
}
