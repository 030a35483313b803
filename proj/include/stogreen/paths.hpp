#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "stogreen/geometry.hpp"

namespace stogreen {

enum class PathKind { free, bridge, loop };

struct SeedInfo {
  std::uint64_t seed{0};
  std::uint64_t stream{0};
};

/// Sampled planar trajectory on a uniform dyadic time grid.
///
/// Invariants: times.size() == points.size() >= 2, times.front() == 0,
/// times.back() == horizon. Loops are pinned bit-exactly.
struct Path {
  std::vector<double> times;
  std::vector<Vec2> points;
  PathKind kind{PathKind::free};
  double horizon{1.0};
  SeedInfo seed_info{};

  std::size_t n_steps() const { return points.size() - 1; }
  Vec2 start() const { return points.front(); }
  Vec2 end() const { return points.back(); }
};

enum class ClosureSource { closed_by_segment, already_loop };

/// Loop closure of a path: vertices.front() == vertices.back().
struct ClosedPolyline {
  std::vector<Vec2> vertices;
  ClosureSource source{ClosureSource::closed_by_segment};
  bool degenerate{false};

  std::size_t n_segments() const { return vertices.empty() ? 0 : vertices.size() - 1; }
  Box bounding_box() const;
  double perimeter() const;
  /// Shoelace signed area (integral of the winding function).
  double signed_area() const;
  ClosedPolyline reversed() const;
};

/// Dyadic piecewise-linear skeleton X^(n) together with the 2^n subpaths X^i.
struct DyadicDecomposition {
  int level{0};
  Path skeleton;
  std::vector<Path> subpaths;

  /// Concatenates the subpaths, dropping shared endpoints.
  std::vector<Vec2> flatten() const;
};

constexpr bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// Planar Brownian motion with per-coordinate increment variance horizon / n_steps.
Path sample_bm(std::size_t n_steps, double horizon, Vec2 start, std::uint64_t seed,
               std::uint64_t stream = 0);

/// Brownian bridge from `start` to `end` by sequential Gaussian conditioning.
/// The result has kind loop when start == end, bridge otherwise.
Path sample_bridge(std::size_t n_steps, double horizon, Vec2 start, Vec2 end, std::uint64_t seed,
                   std::uint64_t stream = 0);

/// Appends the closing segment back to X_0 unless the path is already a loop.
ClosedPolyline close_path(const Path& path);

/// Closes an arbitrary polyline given as raw vertices.
ClosedPolyline close_vertices(std::span<const Vec2> vertices);

/// Exact re-slicing of the stored samples at dyadic level `level`.
DyadicDecomposition dyadic_decompose(const Path& path, int level);

/// Path with times reversed; its closure is the orientation-reversed loop.
Path reverse_path(const Path& path);

/// CSV of (t, x, y) rows with a header line.
void write_path_csv(std::ostream& out, const Path& path);

}  // namespace stogreen
