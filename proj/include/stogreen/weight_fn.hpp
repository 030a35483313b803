#pragma once

#include <functional>
#include <optional>
#include <string>

#include "stogreen/geometry.hpp"

namespace stogreen {

/// Real weight on the plane, addressable by catalog id.
struct WeightFn {
  std::string id;
  std::function<double(Vec2)> value;
  /// Upper bound of |value| on the plane, when the catalog knows one.
  std::optional<double> sup_bound;
  std::optional<double> holder_seminorm_hint;

  double operator()(Vec2 z) const { return value(z); }
};

inline WeightFn constant_weight(double c) {
  return WeightFn{"constant", [c](Vec2) { return c; }, std::abs(c), 0.0};
}

}  // namespace stogreen
