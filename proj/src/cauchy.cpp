#include "stogreen/cauchy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "stogreen/random.hpp"

namespace stogreen {

namespace {

double standard_cauchy(Rng& rng) { return std::tan(std::numbers::pi * (uniform_open(rng) - 0.5)); }

}  // namespace

std::vector<double> sample_cauchy(const CauchyParams& params, std::size_t n, std::uint64_t seed,
                                  std::uint64_t stream) {
  if (n < 1) throw std::invalid_argument("sample_cauchy needs n >= 1");
  if (params.scale < 0.0) throw std::invalid_argument("Cauchy scale must be >= 0");
  std::vector<double> out(n, params.position);
  if (params.scale == 0.0) return out;
  Rng rng = make_rng(seed, stream);
  for (double& x : out) x = params.position + params.scale * standard_cauchy(rng);
  return out;
}

std::complex<double> cauchy_cf(const CauchyParams& params, double alpha) {
  return std::exp(std::complex<double>(-params.scale * std::abs(alpha), params.position * alpha));
}

double quantile(std::span<const double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile level must lie in [0, 1]");
  std::vector<double> v(samples.begin(), samples.end());
  const double h = (static_cast<double>(v.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

CauchyParams fit_cauchy(std::span<const double> samples) {
  if (samples.size() < 100) throw std::invalid_argument("fit_cauchy needs at least 100 samples");
  const double q1 = quantile(samples, 0.25);
  const double q3 = quantile(samples, 0.75);
  return {quantile(samples, 0.5), 0.5 * (q3 - q1)};
}

TruncatedMeans truncated_mean_position(std::span<const double> samples, std::span<const double> ladder) {
  if (ladder.empty()) throw std::invalid_argument("cutoff ladder must not be empty");
  if (samples.empty()) throw std::invalid_argument("truncated mean of an empty sample");
  for (std::size_t i = 0; i < ladder.size(); ++i) {
    if (!(ladder[i] > 0.0)) throw std::invalid_argument("cutoffs must be positive");
    if (i > 0 && !(ladder[i] > ladder[i - 1])) throw std::invalid_argument("cutoffs must be increasing");
  }
  TruncatedMeans out;
  out.cutoffs.assign(ladder.begin(), ladder.end());
  for (double n : ladder) {
    double acc = 0.0;
    for (double z : samples) acc += std::clamp(z, -n, n);
    out.values.push_back(acc / static_cast<double>(samples.size()));
  }
  if (out.values.size() > 1) out.stabilization = std::abs(out.values.back() - out.values[out.values.size() - 2]);
  return out;
}

CauchyProcessPath sample_cauchy_process(std::span<const double> times, std::uint64_t seed, std::uint64_t stream) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("Cauchy process times must start at 0");
  CauchyProcessPath path;
  path.times.assign(times.begin(), times.end());
  path.values.assign(times.size(), 0.0);
  Rng rng = make_rng(seed, stream);
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double dt = times[i] - times[i - 1];
    if (!(dt > 0.0)) throw std::invalid_argument("Cauchy process times must be increasing");
    path.values[i] = path.values[i - 1] + dt * standard_cauchy(rng);
  }
  return path;
}

double young_integral(std::span<const double> integrand_values, const CauchyProcessPath& gamma) {
  if (integrand_values.size() != gamma.values.size())
    throw std::invalid_argument("young_integral: integrand and integrator grids differ");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < gamma.values.size(); ++i)
    acc += integrand_values[i] * (gamma.values[i + 1] - gamma.values[i]);
  return acc;
}

TailProfile tail_profile(std::span<const double> samples, std::span<const double> xs) {
  if (samples.empty()) throw std::invalid_argument("tail profile of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  TailProfile out;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double sum = 0.0;
  for (double x : xs) {
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), x);
    const double p = static_cast<double>(sorted.end() - first) / static_cast<double>(sorted.size());
    out.x.push_back(x);
    out.x_tail.push_back(x * p);
    lo = std::min(lo, x * p);
    hi = std::max(hi, x * p);
    sum += x * p;
  }
  const double mean = xs.empty() ? 0.0 : sum / static_cast<double>(xs.size());
  out.relative_variation = (lo > 0.0 && mean > 0.0) ? (hi - lo) / mean : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace stogreen
