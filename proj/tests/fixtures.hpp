#pragma once

#include "fairrepair/model.hpp"
#include "fairrepair/schema.hpp"

namespace fairrepair::testing {

// Two inputs (x1 protected in [0,8], x2 in [-1,1]), two hidden ReLUs, one
// output: h = relu([1 6; 1 -6] x), f = 1 - 0.1 h1 - 0.1 h2.
inline Mlp running_example() {
  AffineLayer hidden{Matrix(2, 2), Vector::Zero(2)};
  hidden.weight << 1, 6, 1, -6;
  AffineLayer out{Matrix(1, 2), Vector::Constant(1, 1.0)};
  out.weight << -0.1, -0.1;
  return Mlp({hidden, out});
}

inline Box running_box() { return Box(Vector{{0.0, -1.0}}, Vector{{8.0, 1.0}}); }

// x1 protected integer in [0,8]; x2 integer in [-1,1] with epsilon 1 so the
// neighbourhood of any point with x2 = 0 is the whole running box.
inline AttributeSchema running_schema() {
  return AttributeSchema({{"x1", AttributeKind::sensitive, 0, 8, ValueType::integer, 0},
                          {"x2", AttributeKind::nonsensitive, -1, 1, ValueType::integer, 1}});
}

}  // namespace fairrepair::testing
