#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

namespace stogreen {

/// Cauchy law C(p, sigma); sigma == 0 is the point mass at p.
struct CauchyParams {
  double position{0.0};
  double scale{1.0};
};

/// Inverse-CDF sampling p + sigma tan(pi (U - 1/2)).
std::vector<double> sample_cauchy(const CauchyParams& params, std::size_t n, std::uint64_t seed,
                                  std::uint64_t stream = 0);

/// exp(i p alpha - sigma |alpha|).
std::complex<double> cauchy_cf(const CauchyParams& params, double alpha);

/// Empirical quantile, linear interpolation between order statistics.
double quantile(std::span<const double> samples, double p);

/// Median / half-IQR fit. Needs at least 100 samples.
CauchyParams fit_cauchy(std::span<const double> samples);

struct TruncatedMeans {
  std::vector<double> cutoffs;
  std::vector<double> values;  ///< mean of max(min(z, n), -n) per cutoff
  /// |values[last] - values[last - 1]|, 0 for a single cutoff.
  double stabilization{0.0};
};

/// Empirical E[[Z]_n] along an increasing ladder of cutoffs.
TruncatedMeans truncated_mean_position(std::span<const double> samples, std::span<const double> ladder);

struct CauchyProcessPath {
  std::vector<double> times;
  std::vector<double> values;  ///< values[0] == 0
};

/// Cumulative sum of independent C(0, dt) increments on the given times.
CauchyProcessPath sample_cauchy_process(std::span<const double> times, std::uint64_t seed,
                                        std::uint64_t stream = 0);

/// Left-point Riemann-Stieltjes sum of h against gamma on the shared time grid.
double young_integral(std::span<const double> integrand_values, const CauchyProcessPath& gamma);

struct TailProfile {
  std::vector<double> x;
  std::vector<double> x_tail;  ///< x * P(Z >= x)
  /// (max - min) / mean of x_tail; infinite when the tail is empty somewhere.
  double relative_variation{0.0};
};

/// Strong-domain signature: x P(Z >= x) should be flat for large x.
TailProfile tail_profile(std::span<const double> samples, std::span<const double> xs);

}  // namespace stogreen
