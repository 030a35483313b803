#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stogreen/geometry.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/weight_fn.hpp"
#include "stogreen/winding.hpp"

namespace stogreen {

using ScalarField = std::function<double(Vec2)>;
using Params = std::map<std::string, double>;

/// Differential 1-form eta = eta1 dx1 + eta2 dx2 with analytic partials.
struct OneForm {
  std::string id;
  Params params;
  ScalarField eta1;
  ScalarField eta2;
  ScalarField d1_eta2;
  ScalarField d2_eta1;
  ScalarField curl;  ///< d1_eta2 - d2_eta1
  double smoothness{1.0};  ///< Hölder exponent of the partials

  /// The curl as a weight function, id "curl:<form id>".
  WeightFn curl_weight() const;
};

/// Catalog forms:
///   "area"  eta = (-y/2, x/2), curl 1
///   "bump"  eta = (-d2 phi, d1 phi), phi = exp(-|z-c|^2 / (2 s^2)), curl = laplacian phi
///           params cx, cy, s
///   "trig"  eta = (0, sin(a x) cos(b y)), curl = a cos(a x) cos(b y); params a, b
/// Unknown ids or parameters throw std::invalid_argument.
OneForm make_form(const std::string& id, const Params& params = {});

/// alpha * eta + beta * other, componentwise.
OneForm combine(double alpha, const OneForm& eta, double beta, const OneForm& other);

/// Catalog weights:
///   "constant"          value                      (default 1)
///   "bump"              amplitude * exp(-|z-c|^2/(2 s^2)); cx, cy, s, amplitude
///   "compact_bump"      amplitude * (1 - |z-c|^2/r^2)^2 inside the disk; cx, cy, r, amplitude
///   "trig"              cos(a x) cos(b y); a, b
///   "affine_saturated"  clamp(c0 + cx x + cy y, lo, hi)
///   "curl:<form id>"    curl of the catalog form with the same params
WeightFn make_weight(const std::string& id, const Params& params = {});

/// Pointwise product, id "<f>*<g>".
WeightFn product(const WeightFn& f, const WeightFn& g);

/// Linear combination a f + b g.
WeightFn linear_combination(double a, const WeightFn& f, double b, const WeightFn& g);

/// Pairwise (cascade) summation; fixed order, independent of thread count.
double pairwise_sum(std::span<const double> values);

/// Integral of eta along the polyline through `vertices`, 16-point Gauss-Legendre per segment.
double line_integral_exact(const OneForm& form, std::span<const Vec2> vertices);
double line_integral_exact(const OneForm& form, const ClosedPolyline& loop);

enum class StratScheme {
  midpoint_I1,   ///< eta at chord midpoints
  trapezoid_I2,  ///< mean of eta at chord endpoints
  chord_I3,      ///< exact integral along the dyadic skeleton
};

/// Discretized Stratonovich integral of eta along `path` on its level-`level` dyadic skeleton.
double stratonovich_approx(const OneForm& form, const Path& path, int level, StratScheme scheme);

/// Deepest admissible dyadic level of a path.
int max_dyadic_level(const Path& path);

struct GreenRow {
  int K{0};
  double truncated{0.0};
  double residual{0.0};
};

struct GreenReport {
  std::string form_id;
  TruncationMode mode{TruncationMode::clamp};
  double stratonovich{0.0};       ///< chord_I3 at the deepest level
  double stratonovich_gap{0.0};   ///< |I3(deepest) - I3(deepest - 1)|
  double closing_segment{0.0};    ///< integral of eta over [X_T, X_0]
  double rhs{0.0};                ///< stratonovich + closing_segment
  double shoelace_area{0.0};
  double cell_size{0.0};
  double perimeter{0.0};
  std::vector<GreenRow> rows;

  double final_residual() const { return rows.empty() ? 0.0 : rows.back().residual; }
};

/// Truncated winding integrals of curl(eta) against the Stratonovich side of the Green formula.
GreenReport green_residual(const Path& path, const OneForm& form, const Grid& grid, std::span<const int> K_list,
                           TruncationMode mode);

/// Same, with a precomputed winding field of close_path(path).
GreenReport green_residual(const Path& path, const OneForm& form, const WindingField& field,
                           std::span<const int> K_list, TruncationMode mode);

}  // namespace stogreen
