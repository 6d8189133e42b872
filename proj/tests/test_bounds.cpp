#include "doctest.h"
#include "fixtures.hpp"

#include "fairrepair/bounds.hpp"
#include "fairrepair/errors.hpp"
#include "fairrepair/rng.hpp"
#include "fairrepair/train.hpp"

#include <cmath>

using namespace fairrepair;
using fairrepair::testing::running_box;
using fairrepair::testing::running_example;

namespace {

Vector sample_in(const Box& box, Rng& rng) {
  Vector x(box.dim());
  for (Eigen::Index j = 0; j < box.dim(); ++j) x(j) = rng.uniform(box.lower(j), box.upper(j));
  return x;
}

Box random_box(Eigen::Index m, Rng& rng) {
  Vector lo(m), hi(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double a = rng.uniform(-2.0, 2.0);
    lo(j) = a;
    hi(j) = a + rng.uniform(0.0, 1.5);
  }
  return Box(lo, hi);
}

}  // namespace

TEST_CASE("interval propagation on the running example") {
  const Mlp net = running_example();
  const ConcreteBounds cb = ibp_concrete(net.feature_extractor(), running_box());
  REQUIRE(cb.layers.size() == 1);
  for (int i = 0; i < 2; ++i) {
    CHECK(cb.layers[0].pre.lower(i) == -6.0);
    CHECK(cb.layers[0].pre.upper(i) == 14.0);
    CHECK(cb.features.lower(i) == 0.0);
    CHECK(cb.features.upper(i) == 14.0);
  }
  const Interval out = output_interval(net.final_layer(), cb.features);
  CHECK(std::abs(out.lower + 1.8) < 1e-12);
  CHECK(std::abs(out.upper - 1.0) < 1e-12);
}

TEST_CASE("symbolic bounds on the running example") {
  const Mlp net = running_example();
  const SymbolicBounds sb = symbolic_bounds(net.feature_extractor(), running_box());
  CHECK(std::abs(sb.upper_coeff(0, 0) - 0.7) < 1e-12);
  CHECK(std::abs(sb.upper_coeff(0, 1) - 4.2) < 1e-12);
  CHECK(std::abs(sb.upper_const(0) - 4.2) < 1e-12);
  CHECK(std::abs(sb.upper_coeff(1, 0) - 0.7) < 1e-12);
  CHECK(std::abs(sb.upper_coeff(1, 1) + 4.2) < 1e-12);
  CHECK(std::abs(sb.upper_const(1) - 4.2) < 1e-12);
  CHECK(sb.lower_coeff.isZero());
  const Interval out = symbolic_output_interval(net.final_layer(), sb, running_box());
  CHECK(std::abs(out.lower + 0.96) < 1e-9);
  CHECK(out.upper == doctest::Approx(1.0));
  // Per-neuron concretisation never exceeds the interval result.
  const IntervalVector c = concretize(sb, running_box());
  CHECK(c.upper(0) <= 14.0 + 1e-12);
}

TEST_CASE("point box collapses every bound to the forward pass") {
  const Mlp net = init_mlp({3, 4, 4, 1}, 9);
  const Vector x{{0.3, -0.7, 1.1}};
  const Box box = Box::point(x);
  const auto prefix = net.feature_extractor();
  const ConcreteBounds cb = ibp_concrete(prefix, box);
  const Vector h = prefix.forward(x);
  CHECK((cb.features.upper - h).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((cb.features.lower - h).cwiseAbs().maxCoeff() < 1e-12);
  const Interval out = symbolic_output_interval(net.final_layer(), symbolic_bounds(prefix, box), box);
  CHECK(out.lower == doctest::Approx(net.forward(x)).epsilon(1e-12));
  CHECK(out.upper == doctest::Approx(net.forward(x)).epsilon(1e-12));
}

TEST_CASE("bounds are sound and symbolic is no looser than intervals") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const Mlp net = init_mlp({3, 6, 5, 1}, 100 + trial);
    const Box box = random_box(3, rng);
    const auto prefix = net.feature_extractor();
    const ConcreteBounds cb = ibp_concrete(prefix, box);
    for (auto slope : {ReluLowerSlope::zero, ReluLowerSlope::adaptive}) {
      const SymbolicBounds sb = symbolic_bounds(prefix, box, cb, slope);
      const IntervalVector sc = concretize(sb, box);
      const Interval ibp = output_interval(net.final_layer(), cb.features);
      const Interval sym = symbolic_output_interval(net.final_layer(), sb, box);
      CHECK(sym.lower >= ibp.lower - 1e-9);
      CHECK(sym.upper <= ibp.upper + 1e-9);
      for (int s = 0; s < 50; ++s) {
        const Vector x = sample_in(box, rng);
        const Vector h = prefix.forward(x);
        const Vector lo = sb.lower_coeff * x + sb.lower_const;
        const Vector hi = sb.upper_coeff * x + sb.upper_const;
        CHECK((h - lo).minCoeff() >= -1e-9);
        CHECK((hi - h).minCoeff() >= -1e-9);
        CHECK((h - cb.features.lower).minCoeff() >= -1e-9);
        CHECK((cb.features.upper - h).minCoeff() >= -1e-9);
        CHECK((h - sc.lower).minCoeff() >= -1e-9);
        const double f = net.forward(x);
        CHECK(f >= sym.lower - 1e-9);
        CHECK(f <= sym.upper + 1e-9);
      }
    }
  }
}

TEST_CASE("bound propagation rejects mismatched boxes") {
  const Mlp net = running_example();
  CHECK_THROWS_AS(ibp_concrete(net.feature_extractor(), Box::point(Vector::Zero(3))), InputError);
}
