#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stogreen/geometry.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/weight_fn.hpp"

namespace stogreen {

/// Raised when a winding number is requested at a point on the curve.
class OnCurveError : public std::runtime_error {
 public:
  explicit OnCurveError(Vec2 z);
  Vec2 point;
};

/// Distance below which a probe point is treated as lying on the curve.
inline constexpr double kOnCurveTolerance = 1e-12;

/// Winding number of `loop` around `z`: signed crossings of the rightward ray
/// from z, counting a segment iff z.y lies in [y_low, y_high).
/// Throws OnCurveError when z is within kOnCurveTolerance of a segment.
int winding_number(const ClosedPolyline& loop, Vec2 z);

/// Regular cell-centred discretization of a rectangle.
struct Grid {
  Box bbox;
  int nx{0};
  int ny{0};

  double dx() const { return bbox.width() / nx; }
  double dy() const { return bbox.height() / ny; }
  double cell_area() const { return bbox.area() / (static_cast<double>(nx) * ny); }
  double cell_diagonal() const { return std::hypot(dx(), dy()); }
  Vec2 center(int ix, int iy) const {
    return {bbox.xmin + (ix + 0.5) * dx(), bbox.ymin + (iy + 0.5) * dy()};
  }
  std::size_t cells() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }

  /// Grid over `box` enlarged so that at least `padding` whole cells surround it.
  static Grid covering(const Box& box, int nx, int ny, int padding = 2);
  static Grid covering(const ClosedPolyline& loop, int nx, int ny, int padding = 2);

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.nx == b.nx && a.ny == b.ny && a.bbox.xmin == b.bbox.xmin && a.bbox.xmax == b.bbox.xmax &&
           a.bbox.ymin == b.bbox.ymin && a.bbox.ymax == b.bbox.ymax;
  }
};

/// Integer winding per grid cell, evaluated at (possibly jittered) cell centres.
struct WindingField {
  Grid grid;
  std::vector<std::int32_t> winding;  ///< row-major, ix fastest
  std::vector<std::uint8_t> boundary; ///< 1 if the centre is within one cell diagonal of the curve
  std::vector<double> row_y;          ///< y of the sample point used in each row
  int jittered_rows{0};

  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(grid.nx) + static_cast<std::size_t>(ix);
  }
  std::int32_t at(int ix, int iy) const { return winding[index(ix, iy)]; }
  bool is_boundary(int ix, int iy) const { return boundary[index(ix, iy)] != 0; }
  /// Point at which cell (ix, iy) was evaluated.
  Vec2 sample_point(int ix, int iy) const {
    return {grid.bbox.xmin + (ix + 0.5) * grid.dx(), row_y[static_cast<std::size_t>(iy)]};
  }
  std::int32_t min_winding() const;
  std::int32_t max_winding() const;
  double boundary_area() const;
};

/// Scanline winding field, rows distributed over OpenMP threads.
/// Cost O(segments * rows spanned + cells).
WindingField winding_field(const ClosedPolyline& loop, const Grid& grid);

/// Same scanline kernel on a single thread; kept as the reference for the parallel one.
WindingField winding_field_serial(const ClosedPolyline& loop, const Grid& grid);

/// Brute-force field: winding_number at every cell sample point. O(segments * cells).
/// Boundary cells that sit on the curve get winding 0.
WindingField winding_field_bruteforce(const ClosedPolyline& loop, const Grid& grid);

/// Exact winding numbers for many query points using a y-banded segment index.
/// Agrees with winding_number on every point, including the on-curve error.
class WindingLocator {
 public:
  explicit WindingLocator(const ClosedPolyline& loop, int bands = 0);
  int operator()(Vec2 z) const;
  const Box& bounding_box() const { return box_; }

 private:
  std::vector<Vec2> v_;
  Box box_;
  double band_height_{1.0};
  std::vector<std::uint32_t> offsets_;
  std::vector<std::uint32_t> segments_;
};

/// Which cells enter the level measures.
enum class BoundaryPolicy {
  include,  ///< every cell, midpoint rule over the whole grid
  exclude,  ///< drop cells flagged in WindingField::boundary
};

/// Weighted measures of the level sets A_k and of the tails D_n, D_-n.
struct LevelMeasures {
  std::string weight_id;
  int n_max{0};
  BoundaryPolicy policy{BoundaryPolicy::include};
  std::map<int, double> per_level;       ///< k -> f(A_k), k != 0, attained levels only
  std::map<int, double> per_level_area;  ///< k -> |A_k|
  std::vector<double> tails_pos;         ///< [n] = f(D_n), n = 0..n_max+1 (index 0 unused)
  std::vector<double> tails_neg;         ///< [n] = f(D_-n)
  std::vector<double> areas_pos;         ///< [n] = |D_n|
  std::vector<double> areas_neg;         ///< [n] = |D_-n|
  double excluded_area{0.0};

  /// f(D_n) for n >= 1, f(D_-|n|) for n <= -1, from the stored tails.
  double f_tail(int n) const;
  double area_tail(int n) const;
};

inline constexpr int kDefaultNMax = 64;

LevelMeasures level_measures(const WindingField& field, const WeightFn& f, int n_max = kDefaultNMax,
                             BoundaryPolicy policy = BoundaryPolicy::include);

enum class TruncationMode {
  clamp,  ///< [x]_K = max(min(x, K), -K)
  zero,   ///< [x]_K = x 1{|x| <= K}
};

/// Integral of [n_X]_K f over the plane from the tail measures.
double truncated_winding_integral(const LevelMeasures& m, int K, TruncationMode mode);

struct TailPolicy {
  /// Assumed decay exponent gamma in |f(D_n) - f(D_-n)| <= C n^{-1-gamma}.
  double decay_exponent{0.25};
};

struct RegularizedDiagnostics {
  std::vector<double> partial_sums;  ///< partial_sums[n-1] = sum_{m<=n} (f(D_m) - f(D_-m))
  std::vector<double> differences;   ///< f(D_n) - f(D_-n)
  double fitted_constant{0.0};
  double remainder_bound{0.0};
  bool convergence_warning{false};
};

struct RegularizedIntegral {
  double value{0.0};
  RegularizedDiagnostics diagnostics;
};

/// Abel sum of f(D_n) - f(D_-n) up to n_max, with a heuristic tail bound.
RegularizedIntegral regularized_winding_integral(const LevelMeasures& m, const TailPolicy& policy = {});

enum class TailSigns { pos_pos, neg_neg, pos_neg, neg_pos };

/// Area of {n_A >= n} ∩ {n_B >= n} (or the chosen sign pattern). Grids must be identical.
double joint_tail_area(const WindingField& a, const WindingField& b, int n,
                       TailSigns signs = TailSigns::pos_pos,
                       BoundaryPolicy policy = BoundaryPolicy::include);

/// Binary dump: "SGWF", u32 version, f64 xmin xmax ymin ymax, i32 nx ny, then
/// nx*ny row-major i32. Everything little-endian.
void write_field_dump(std::ostream& out, const WindingField& field);
WindingField read_field_dump(std::istream& in);

/// CSV rows (k, area, f_measure) for every attained nonzero level.
void write_level_measures_csv(std::ostream& out, const LevelMeasures& m);

}  // namespace stogreen
