#include "stogreen/paths.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include "stogreen/random.hpp"

namespace stogreen {

namespace {

void check_sampling_args(std::size_t n_steps, double horizon) {
  if (n_steps < 2 || !is_power_of_two(n_steps))
    throw std::invalid_argument("n_steps must be a power of two >= 2, got " +
                                std::to_string(n_steps));
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("horizon must be positive");
}

std::vector<double> uniform_times(std::size_t n_steps, double horizon) {
  std::vector<double> times(n_steps + 1);
  const double dt = horizon / static_cast<double>(n_steps);
  for (std::size_t i = 0; i < n_steps; ++i) times[i] = static_cast<double>(i) * dt;
  times[n_steps] = horizon;
  return times;
}

}  // namespace

Box ClosedPolyline::bounding_box() const {
  Box b{vertices.front().x, vertices.front().x, vertices.front().y, vertices.front().y};
  for (const Vec2& v : vertices) {
    b.xmin = std::min(b.xmin, v.x);
    b.xmax = std::max(b.xmax, v.x);
    b.ymin = std::min(b.ymin, v.y);
    b.ymax = std::max(b.ymax, v.y);
  }
  return b;
}

double ClosedPolyline::perimeter() const {
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) total += norm(vertices[i + 1] - vertices[i]);
  return total;
}

double ClosedPolyline::signed_area() const {
  // Relative to the first vertex to limit cancellation for translated loops.
  const Vec2 o = vertices.front();
  double twice = 0.0;
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
    twice += cross(vertices[i] - o, vertices[i + 1] - o);
  return 0.5 * twice;
}

ClosedPolyline ClosedPolyline::reversed() const {
  ClosedPolyline r = *this;
  std::reverse(r.vertices.begin(), r.vertices.end());
  return r;
}

std::vector<Vec2> DyadicDecomposition::flatten() const {
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < subpaths.size(); ++i) {
    const auto& pts = subpaths[i].points;
    out.insert(out.end(), pts.begin() + (i == 0 ? 0 : 1), pts.end());
  }
  return out;
}

Path sample_bm(std::size_t n_steps, double horizon, Vec2 start, std::uint64_t seed,
               std::uint64_t stream) {
  check_sampling_args(n_steps, horizon);
  Path path;
  path.kind = PathKind::free;
  path.horizon = horizon;
  path.seed_info = {seed, stream};
  path.times = uniform_times(n_steps, horizon);
  path.points.resize(n_steps + 1);
  path.points[0] = start;

  Rng rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, std::sqrt(horizon / static_cast<double>(n_steps)));
  for (std::size_t i = 1; i <= n_steps; ++i) {
    const double dx = normal(rng);
    const double dy = normal(rng);
    path.points[i] = {path.points[i - 1].x + dx, path.points[i - 1].y + dy};
  }
  return path;
}

Path sample_bridge(std::size_t n_steps, double horizon, Vec2 start, Vec2 end, std::uint64_t seed,
                   std::uint64_t stream) {
  check_sampling_args(n_steps, horizon);
  Path path;
  path.kind = (start == end) ? PathKind::loop : PathKind::bridge;
  path.horizon = horizon;
  path.seed_info = {seed, stream};
  path.times = uniform_times(n_steps, horizon);
  path.points.resize(n_steps + 1);
  path.points[0] = start;

  Rng rng = make_rng(seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t i = 1; i < n_steps; ++i) {
    const double t0 = path.times[i - 1];
    const double t1 = path.times[i];
    const double remaining = horizon - t0;
    const double w = (t1 - t0) / remaining;
    const double sd = std::sqrt((t1 - t0) * (horizon - t1) / remaining);
    const Vec2 prev = path.points[i - 1];
    const Vec2 mean = prev + w * (end - prev);
    const double zx = normal(rng);
    const double zy = normal(rng);
    path.points[i] = {mean.x + sd * zx, mean.y + sd * zy};
  }
  path.points[n_steps] = end;
  return path;
}

ClosedPolyline close_vertices(std::span<const Vec2> vertices) {
  if (vertices.size() < 2) throw std::invalid_argument("polyline needs at least 2 vertices");
  ClosedPolyline loop;
  loop.vertices.assign(vertices.begin(), vertices.end());
  if (loop.vertices.front() == loop.vertices.back()) {
    loop.source = ClosureSource::already_loop;
  } else {
    loop.source = ClosureSource::closed_by_segment;
    loop.vertices.push_back(loop.vertices.front());
  }
  loop.degenerate = std::all_of(loop.vertices.begin(), loop.vertices.end(),
                                [&](Vec2 v) { return v == loop.vertices.front(); });
  return loop;
}

ClosedPolyline close_path(const Path& path) {
  ClosedPolyline loop = close_vertices(path.points);
  if (path.kind == PathKind::loop) loop.source = ClosureSource::already_loop;
  return loop;
}

DyadicDecomposition dyadic_decompose(const Path& path, int level) {
  const std::size_t n_steps = path.n_steps();
  if (level < 0 || level >= 63 || (std::size_t{1} << level) > n_steps ||
      n_steps % (std::size_t{1} << level) != 0)
    throw std::invalid_argument("dyadic level " + std::to_string(level) +
                                " is not admissible for a path with " + std::to_string(n_steps) +
                                " steps");
  const std::size_t pieces = std::size_t{1} << level;
  const std::size_t stride = n_steps / pieces;

  DyadicDecomposition dec;
  dec.level = level;
  dec.skeleton.kind = path.kind;
  dec.skeleton.horizon = path.horizon;
  dec.skeleton.seed_info = path.seed_info;
  dec.skeleton.times.reserve(pieces + 1);
  dec.skeleton.points.reserve(pieces + 1);
  for (std::size_t i = 0; i <= pieces; ++i) {
    dec.skeleton.times.push_back(path.times[i * stride]);
    dec.skeleton.points.push_back(path.points[i * stride]);
  }

  dec.subpaths.resize(pieces);
  for (std::size_t i = 0; i < pieces; ++i) {
    Path& sub = dec.subpaths[i];
    const std::size_t lo = i * stride;
    const double t0 = path.times[lo];
    sub.points.assign(path.points.begin() + static_cast<std::ptrdiff_t>(lo),
                      path.points.begin() + static_cast<std::ptrdiff_t>(lo + stride + 1));
    sub.times.resize(stride + 1);
    for (std::size_t j = 0; j <= stride; ++j) sub.times[j] = path.times[lo + j] - t0;
    sub.horizon = sub.times.back();
    sub.kind = sub.points.front() == sub.points.back() ? PathKind::loop : PathKind::free;
    sub.seed_info = path.seed_info;
  }
  return dec;
}

Path reverse_path(const Path& path) {
  Path r = path;
  std::reverse(r.points.begin(), r.points.end());
  for (std::size_t i = 0; i < r.times.size(); ++i)
    r.times[i] = path.horizon - path.times[path.times.size() - 1 - i];
  r.times.front() = 0.0;
  r.times.back() = path.horizon;
  return r;
}

void write_path_csv(std::ostream& out, const Path& path) {
  out << "t,x,y\n" << std::setprecision(17);
  for (std::size_t i = 0; i < path.points.size(); ++i)
    out << path.times[i] << ',' << path.points[i].x << ',' << path.points[i].y << '\n';
}

}  // namespace stogreen
