#include <doctest.h>

#include <cmath>
#include <numbers>

#include "stogreen/cauchy.hpp"
#include "stogreen/paths.hpp"

using namespace stogreen;

namespace {

constexpr double pi = std::numbers::pi;

// E[max(min(Z, n), -n)] for Z ~ C(p, 1), in closed form.
double clamped_mean(double p, double n) {
  const double F_hi = 0.5 + std::atan(n - p) / pi;
  const double F_lo = 0.5 + std::atan(-n - p) / pi;
  const double inner = p * (F_hi - F_lo) + std::log((1.0 + (n - p) * (n - p)) / (1.0 + (n + p) * (n + p))) / (2.0 * pi);
  return inner + n * (1.0 - F_hi) - n * F_lo;
}

// Asymptotic standard deviation of the sample median of C(0, 1).
double median_sd(std::size_t n) { return pi / (2.0 * std::sqrt(static_cast<double>(n))); }

// Asymptotic standard deviation of the half-IQR of C(0, 1).
double half_iqr_sd(std::size_t n) { return pi / (2.0 * std::sqrt(static_cast<double>(n))); }

}  // namespace

TEST_SUITE("cauchy") {
  TEST_CASE("degenerate scale returns the position exactly") {
    for (double x : sample_cauchy({3.0, 0.0}, 1000, 1)) CHECK(x == 3.0);
    CHECK_THROWS_AS(sample_cauchy({0.0, -1.0}, 10, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_cauchy({0.0, 1.0}, 0, 1), std::invalid_argument);
  }

  TEST_CASE("standard Cauchy median and characteristic function") {
    const std::size_t n = 200000;
    const auto xs = sample_cauchy({0.0, 1.0}, n, 5);
    CHECK(std::abs(quantile(xs, 0.5)) < 3.0 * median_sd(n));
    double re = 0.0, im = 0.0;
    for (double x : xs) {
      re += std::cos(x);
      im += std::sin(x);
    }
    CHECK(std::abs(re / n - std::exp(-1.0)) < 3.0 / std::sqrt(double(n)));
    CHECK(std::abs(im / n) < 3.0 / std::sqrt(double(n)));
  }

  TEST_CASE("sampling is deterministic per seed and stream") {
    CHECK(sample_cauchy({0, 1}, 50, 9, 2) == sample_cauchy({0, 1}, 50, 9, 2));
    CHECK(sample_cauchy({0, 1}, 50, 9, 2) != sample_cauchy({0, 1}, 50, 9, 3));
  }

  TEST_CASE("cauchy_cf closed forms and modulus") {
    CHECK(cauchy_cf({0.0, 1.0}, 0.0) == std::complex<double>(1.0, 0.0));
    CHECK(std::abs(cauchy_cf({0.0, 1.0}, 1.0) - std::exp(-1.0)) < 1e-15);
    CHECK(std::abs(cauchy_cf({0.0, 1.0}, -1.0) - std::exp(-1.0)) < 1e-15);
    const auto c = cauchy_cf({2.0, 0.0}, 0.7);
    CHECK(std::abs(c - std::exp(std::complex<double>(0.0, 1.4))) < 1e-15);
    CHECK(std::abs(c) == doctest::Approx(1.0));
    for (double a : {-3.0, -0.5, 0.2, 4.0}) {
      CHECK(std::abs(cauchy_cf({1.0, 0.3}, a)) < 1.0);
      CHECK(std::abs(cauchy_cf({1.0, 0.0}, a)) == doctest::Approx(1.0));
    }
  }

  TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{5.0, 1.0, 3.0, 2.0, 4.0};
    CHECK(quantile(v, 0.0) == 1.0);
    CHECK(quantile(v, 1.0) == 5.0);
    CHECK(quantile(v, 0.5) == 3.0);
    CHECK(quantile(v, 0.25) == 2.0);
    CHECK(quantile(v, 0.1) == doctest::Approx(1.4));
    const std::vector<double> empty;
    CHECK_THROWS_AS(quantile(empty, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(quantile(v, 1.5), std::invalid_argument);
  }

  TEST_CASE("fit_cauchy recovers parameters within the quantile-CLT tolerance") {
    const std::size_t n = 100000;
    // Four standard deviations of either estimator, about 0.02 at this sample size.
    const double tol = 4.0 * std::max(median_sd(n), half_iqr_sd(n));
    CHECK(tol <= 0.02);
    const CauchyParams fit = fit_cauchy(sample_cauchy({0.0, 1.0}, n, 12));
    CHECK(std::abs(fit.position) <= tol);
    CHECK(std::abs(fit.scale - 1.0) <= tol);
  }

  TEST_CASE("fit_cauchy edge cases and equivariance") {
    const std::vector<double> constant(200, 4.5);
    const CauchyParams c = fit_cauchy(constant);
    CHECK(c.position == 4.5);
    CHECK(c.scale == 0.0);
    const std::vector<double> small(99, 1.0);
    CHECK_THROWS_AS(fit_cauchy(small), std::invalid_argument);

    const auto xs = sample_cauchy({0.5, 2.0}, 1001, 4);
    const CauchyParams base = fit_cauchy(xs);
    for (double a : {3.0, -2.0}) {
      std::vector<double> ys;
      for (double x : xs) ys.push_back(a * x + 1.25);
      const CauchyParams t = fit_cauchy(ys);
      CHECK(t.position == doctest::Approx(a * base.position + 1.25).epsilon(1e-12));
      CHECK(t.scale == doctest::Approx(std::abs(a) * base.scale).epsilon(1e-12));
    }
  }

  TEST_CASE("truncated means of symmetric samples approach zero") {
    const auto xs = sample_cauchy({0.0, 1.0}, 1000000, 21);
    const std::vector<double> ladder{1.0, 10.0, 100.0};
    const TruncatedMeans tm = truncated_mean_position(xs, ladder);
    REQUIRE(tm.values.size() == 3);
    CHECK(std::abs(tm.values[2]) <= 0.05);
    CHECK(tm.stabilization == doctest::Approx(std::abs(tm.values[2] - tm.values[1])));
  }

  TEST_CASE("truncated means of a constant") {
    const std::vector<double> xs(10, 3.0);
    const std::vector<double> ladder{3.0, 4.0, 50.0};
    const TruncatedMeans tm = truncated_mean_position(xs, ladder);
    for (double v : tm.values) CHECK(v == 3.0);
    CHECK(tm.stabilization == 0.0);
  }

  TEST_CASE("truncated means of a shifted Cauchy follow the closed form") {
    const std::size_t n = 400000;
    const auto xs = sample_cauchy({1.0, 1.0}, n, 22);
    const std::vector<double> ladder{10.0, 100.0, 1000.0};
    const TruncatedMeans tm = truncated_mean_position(xs, ladder);
    for (std::size_t i = 0; i < ladder.size(); ++i) {
      // Var of a clamped standard Cauchy is below 2n/pi.
      const double se = std::sqrt(2.0 * ladder[i] / pi / n);
      CHECK(std::abs(tm.values[i] - clamped_mean(1.0, ladder[i])) < 4.0 * se);
    }
    CHECK(clamped_mean(1.0, 1000.0) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(std::abs(tm.values.back() - 1.0) < 0.1);
  }

  TEST_CASE("truncated mean ladder validation") {
    const std::vector<double> xs{1.0, 2.0};
    const std::vector<double> empty;
    CHECK_THROWS_AS(truncated_mean_position(xs, empty), std::invalid_argument);
    const std::vector<double> dec{2.0, 1.0};
    CHECK_THROWS_AS(truncated_mean_position(xs, dec), std::invalid_argument);
    const std::vector<double> neg{-1.0, 1.0};
    CHECK_THROWS_AS(truncated_mean_position(xs, neg), std::invalid_argument);
  }

  TEST_CASE("Cauchy process: anchoring and stability of Gamma_1") {
    const Path grid = sample_bm(128, 1.0, {}, 0);
    const CauchyProcessPath g = sample_cauchy_process(grid.times, 1);
    CHECK(g.values.front() == 0.0);
    CHECK(g.values.size() == grid.times.size());

    std::vector<double> ends;
    for (std::uint64_t r = 0; r < 100000; ++r) ends.push_back(sample_cauchy_process(grid.times, 2, r).values.back());
    const CauchyParams fit = fit_cauchy(ends);
    CHECK(std::abs(fit.scale - 1.0) <= 0.03);
    CHECK(std::abs(fit.position) <= 0.03);
  }

  TEST_CASE("Cauchy process: Gamma_1 does not depend on the number of steps") {
    const Path coarse = sample_bm(128, 1.0, {}, 0);
    const Path fine = sample_bm(1024, 1.0, {}, 0);
    const std::size_t reps = 20000;
    std::vector<double> a, b;
    for (std::uint64_t r = 0; r < reps; ++r) {
      a.push_back(sample_cauchy_process(coarse.times, 3, r).values.back());
      b.push_back(sample_cauchy_process(fine.times, 4, r).values.back());
    }
    const CauchyParams fa = fit_cauchy(a), fb = fit_cauchy(b);
    const double se = std::sqrt(2.0) * median_sd(reps);
    CHECK(std::abs(fa.position - fb.position) < 3.0 * se);
    CHECK(std::abs(fa.scale - fb.scale) < 3.0 * std::sqrt(2.0) * half_iqr_sd(reps));
  }

  TEST_CASE("Cauchy process rejects bad grids") {
    const std::vector<double> late{0.5, 1.0};
    CHECK_THROWS_AS(sample_cauchy_process(late, 1), std::invalid_argument);
    const std::vector<double> flat{0.0, 0.5, 0.5};
    CHECK_THROWS_AS(sample_cauchy_process(flat, 1), std::invalid_argument);
  }

  TEST_CASE("young_integral telescopes for constant integrands") {
    const Path grid = sample_bm(64, 1.0, {}, 0);
    const CauchyProcessPath g = sample_cauchy_process(grid.times, 5);
    const std::vector<double> ones(g.values.size(), 1.0);
    CHECK(young_integral(ones, g) == doctest::Approx(g.values.back()).epsilon(1e-12));
    const std::vector<double> c(g.values.size(), -2.5);
    CHECK(young_integral(c, g) == doctest::Approx(-2.5 * g.values.back()).epsilon(1e-12));
    const std::vector<double> wrong(3, 1.0);
    CHECK_THROWS_AS(young_integral(wrong, g), std::invalid_argument);
  }

  TEST_CASE("young_integral has the conditional Cauchy law") {
    const Path x = sample_bm(256, 1.0, {}, 6);
    std::vector<double> h;
    for (const Vec2& z : x.points) h.push_back(std::cos(3.0 * z.x) * std::exp(-z.y * z.y));
    double scale = 0.0;
    for (std::size_t i = 0; i + 1 < h.size(); ++i) scale += std::abs(h[i]) * (x.times[i + 1] - x.times[i]);
    std::vector<double> draws;
    for (std::uint64_t r = 0; r < 10000; ++r) draws.push_back(young_integral(h, sample_cauchy_process(x.times, 7, r)));
    const CauchyParams fit = fit_cauchy(draws);
    CHECK(std::abs(fit.scale - scale) <= 0.05);
    CHECK(std::abs(fit.position) <= 0.05);
  }

  TEST_CASE("tail profile of Cauchy samples is flat at 1/pi") {
    const auto xs = sample_cauchy({0.0, 1.0}, 1000000, 8);
    const std::vector<double> probes{10, 20, 40, 70, 100};
    const TailProfile t = tail_profile(xs, probes);
    CHECK(t.relative_variation <= 0.3);
    for (double v : t.x_tail) CHECK(v == doctest::Approx(1.0 / pi).epsilon(0.1));

    const std::vector<double> bounded(1000, 1.0);
    CHECK(std::isinf(tail_profile(bounded, probes).relative_variation));
  }
}
