#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "stogreen/geometry.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/weight_fn.hpp"
#include "stogreen/winding.hpp"

namespace stogreen {

/// Poisson impurities with intensity rho * g(z) dz on `window`, phase weight f, coupling alpha.
struct ImpurityExperiment {
  double rho{1.0};
  WeightFn g;
  WeightFn f;
  double alpha{1.0};
  Box window;
  int n_replicas{100};
};

/// Throws std::invalid_argument unless rho > 0, the window is nondegenerate, g has a
/// sup bound and g >= 0 on 10^4 sampled window points.
void validate(const ImpurityExperiment& exp);

struct ImpuritySample {
  std::vector<Vec2> points;
  std::size_t count{0};
  bool empty_intensity{false};  ///< g integrates to zero on the window
};

/// Integral of g over the window (composite 4-point Gauss-Legendre, 64 x 64 panels).
double window_integral(const WeightFn& g, const Box& window);

/// Poisson count with mean rho * int g, points drawn from g by rejection on the window.
ImpuritySample sample_impurities(const ImpurityExperiment& exp, std::uint64_t seed, std::uint64_t stream = 0);

/// (1 / lambda) sum_z f(z) n_X(z) with exact per-point winding. Throws OnCurveError.
double weighted_winding_sum(const ClosedPolyline& loop, const ImpuritySample& sample, const WeightFn& f,
                            double lambda);
double weighted_winding_sum(const WindingLocator& locator, std::span<const Vec2> points, const WeightFn& f,
                            double lambda);

struct XiReplicas {
  std::vector<std::vector<double>> xi;  ///< xi[j][r]: weight j, replica r (discarded replicas removed)
  std::size_t resampled_points{0};
  std::size_t discarded_replicas{0};
};

/// Replicas of xi_lambda(f_j) for several weights sharing each Poisson sample.
/// On-curve points are redrawn (at most 10 times per point) before a replica is discarded.
XiReplicas simulate_xi(const ImpurityExperiment& exp, const ClosedPolyline& loop, std::span<const WeightFn> weights,
                       std::uint64_t seed);

struct CfEstimate {
  std::complex<double> value;
  double se_re{0.0};
  double se_im{0.0};
  std::size_t replicas{0};
};

/// Mean of exp(i alpha x) with componentwise standard errors.
CfEstimate cf_from_samples(std::span<const double> xs, double alpha);

/// Monte Carlo E[exp(i alpha xi_lambda(f))] over exp.n_replicas Poisson samples (needs >= 100).
CfEstimate empirical_cf(const ImpurityExperiment& exp, const ClosedPolyline& loop, std::uint64_t seed);

/// Nonzero-winding cells with f and g evaluated at the cell sample points.
struct CampbellCells {
  std::vector<std::int32_t> k;
  std::vector<double> f;
  std::vector<double> g;
  double cell_area{0.0};
};

CampbellCells campbell_cells(const WindingField& field, const WeightFn& f, const WeightFn& g,
                             BoundaryPolicy policy = BoundaryPolicy::include);

struct CampbellResult {
  std::complex<double> G;   ///< sum_{k != 0} int_{A_k} (exp(i k beta f) - 1) g dz
  std::complex<double> cf;  ///< exp(lambda G)
  double beta{0.0};
  double lambda{0.0};
};

CampbellResult campbell_cf(const CampbellCells& cells, double beta, double lambda);
CampbellResult campbell_cf(const WindingField& field, const WeightFn& f, const WeightFn& g, double beta,
                           double lambda);

/// Trapezoid rule for int_0^T h(X_t) dt over the sample times.
double occupation_integral(const Path& path, const WeightFn& h);

struct LimitCf {
  std::complex<double> value;
  double regularized{0.0};  ///< regularized integral of n_X f g
  double occupation{0.0};   ///< int |f| g (X_t) dt
  bool convergence_warning{false};
};

/// exp(i alpha reg(n f g) - |alpha|/2 int |f| g (X_t) dt); `fg_measures` are the level
/// measures of the product weight f g.
LimitCf limit_cf(const Path& path, const LevelMeasures& fg_measures, const WeightFn& f, const WeightFn& g,
                 double alpha);

/// One draw of reg(n f g) + 1/2 int (f g)(X_t) dGamma_t with a fresh Cauchy process.
double xi_limit_sample(const Path& path, const LevelMeasures& fg_measures, const WeightFn& f, const WeightFn& g,
                       std::uint64_t seed, std::uint64_t stream = 0);

/// n draws of the limit variable given the regularized integral.
std::vector<double> xi_limit_samples(const Path& path, double regularized, const WeightFn& f, const WeightFn& g,
                                     std::size_t n, std::uint64_t seed);

}  // namespace stogreen
