#pragma once
// Independent reference computations used only by the tests.

#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "stogreen/geometry.hpp"

namespace oracle {

using stogreen::Vec2;

// Winding number as the total turning angle seen from z.
inline int angle_sum_winding(std::span<const Vec2> closed, Vec2 z) {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < closed.size(); ++i) {
    const Vec2 a{closed[i].x - z.x, closed[i].y - z.y};
    const Vec2 b{closed[i + 1].x - z.x, closed[i + 1].y - z.y};
    total += std::atan2(a.x * b.y - a.y * b.x, a.x * b.x + a.y * b.y);
  }
  return static_cast<int>(std::lround(total / (2.0 * std::numbers::pi)));
}

// Plain shoelace sum about the origin.
inline double shoelace(std::span<const Vec2> closed) {
  long double twice = 0.0L;
  for (std::size_t i = 0; i + 1 < closed.size(); ++i)
    twice += static_cast<long double>(closed[i].x) * closed[i + 1].y -
             static_cast<long double>(closed[i].y) * closed[i + 1].x;
  return static_cast<double>(twice / 2.0L);
}

// Conditional variance of one coordinate of a Brownian motion at t given B(T) by
// Gaussian conditioning on the covariance min(s, t).
inline double conditioned_variance(double t, double T) {
  const double s11 = t, s12 = std::min(t, T), s22 = T;
  return s11 - s12 * s12 / s22;
}

inline std::vector<Vec2> regular_polygon(int n, double radius, Vec2 c = {}, int turns = 1) {
  std::vector<Vec2> v;
  for (int k = 0; k <= n * turns; ++k) {
    const double th = 2.0 * std::numbers::pi * (k % n) / n;
    v.push_back({c.x + radius * std::cos(th), c.y + radius * std::sin(th)});
  }
  return v;
}

inline std::vector<Vec2> square(double side, Vec2 corner = {}) {
  return {corner,
          {corner.x + side, corner.y},
          {corner.x + side, corner.y + side},
          {corner.x, corner.y + side},
          corner};
}

}  // namespace oracle
