#include <doctest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"
#include "stogreen/cauchy.hpp"
#include "stogreen/forms.hpp"
#include "stogreen/impurities.hpp"

using namespace stogreen;

namespace {

struct Setup {
  Path path;
  ClosedPolyline loop;
  WindingField field;
};

Setup brownian_setup(std::size_t n, int grid, std::uint64_t seed) {
  Setup s;
  s.path = sample_bridge(n, 1.0, {}, {}, seed);
  s.loop = close_path(s.path);
  s.field = winding_field(s.loop, Grid::covering(s.loop, grid, grid));
  return s;
}

}  // namespace

TEST_SUITE("impurities") {
  TEST_CASE("window integrals") {
    CHECK(window_integral(constant_weight(1.0), Box{-1, 1, -1, 1}) == doctest::Approx(4.0));
    CHECK(window_integral(make_weight("bump"), Box{-5, 5, -5, 5}) ==
          doctest::Approx(2.0 * std::numbers::pi * 0.25).epsilon(1e-10));
  }

  TEST_CASE("Poisson count has mean lambda times the g-mass") {
    ImpurityExperiment exp{100.0, constant_weight(1.0), constant_weight(1.0), 1.0, Box{-1, 1, -1, 1}, 100};
    const int reps = 400;
    double total = 0.0;
    for (int r = 0; r < reps; ++r) {
      const ImpuritySample s = sample_impurities(exp, 3, static_cast<std::uint64_t>(r));
      CHECK(s.count == s.points.size());
      CHECK_FALSE(s.empty_intensity);
      for (const Vec2& z : s.points) CHECK(exp.window.contains(z));
      total += static_cast<double>(s.count);
    }
    CHECK(std::abs(total / reps - 400.0) < 3.0 * 20.0 / std::sqrt(double(reps)));
  }

  TEST_CASE("vanishing intensity gives flagged empty samples") {
    ImpurityExperiment exp{100.0, constant_weight(0.0), constant_weight(1.0), 1.0, Box{-1, 1, -1, 1}, 100};
    for (std::uint64_t r = 0; r < 10; ++r) {
      const ImpuritySample s = sample_impurities(exp, 1, r);
      CHECK(s.count == 0);
      CHECK(s.points.empty());
      CHECK(s.empty_intensity);
    }
  }

  TEST_CASE("rejection sampling follows a bump density (chi-square on 8x8 bins)") {
    const WeightFn g = make_weight("bump", {{"cx", 0.2}, {"s", 0.6}});
    const Box w{-1.5, 1.5, -1.5, 1.5};
    ImpurityExperiment exp{20000.0, g, constant_weight(1.0), 1.0, w, 100};
    const ImpuritySample s = sample_impurities(exp, 17);
    std::array<double, 64> counts{};
    for (const Vec2& z : s.points) {
      const int bx = std::min(7, static_cast<int>((z.x - w.xmin) / w.width() * 8));
      const int by = std::min(7, static_cast<int>((z.y - w.ymin) / w.height() * 8));
      counts[static_cast<std::size_t>(by * 8 + bx)] += 1.0;
    }
    const double mass = window_integral(g, w);
    double chi2 = 0.0;
    for (int by = 0; by < 8; ++by)
      for (int bx = 0; bx < 8; ++bx) {
        const Box cell{w.xmin + bx * w.width() / 8, w.xmin + (bx + 1) * w.width() / 8, w.ymin + by * w.height() / 8,
                       w.ymin + (by + 1) * w.height() / 8};
        const double expected = static_cast<double>(s.count) * window_integral(g, cell) / mass;
        const double o = counts[static_cast<std::size_t>(by * 8 + bx)];
        chi2 += (o - expected) * (o - expected) / expected;
      }
    CHECK(chi2 < 92.01);  // 99th percentile of chi-square with 63 degrees of freedom
  }

  TEST_CASE("validation of experiments") {
    const Box w{-1, 1, -1, 1};
    CHECK_NOTHROW(validate({1.0, constant_weight(1.0), constant_weight(1.0), 1.0, w, 100}));
    CHECK_THROWS_AS(validate({0.0, constant_weight(1.0), constant_weight(1.0), 1.0, w, 100}), std::invalid_argument);
    CHECK_THROWS_AS(validate({1.0, constant_weight(-1.0), constant_weight(1.0), 1.0, w, 100}), std::invalid_argument);
    CHECK_THROWS_AS(validate({1.0, make_weight("trig"), constant_weight(1.0), 1.0, w, 100}), std::invalid_argument);
    WeightFn unbounded{"u", [](Vec2) { return 1.0; }, std::nullopt, std::nullopt};
    CHECK_THROWS_AS(validate({1.0, unbounded, constant_weight(1.0), 1.0, w, 100}), std::invalid_argument);
    CHECK_THROWS_AS(validate({1.0, constant_weight(1.0), constant_weight(1.0), 1.0, Box{0, 0, 0, 1}, 100}),
                    std::invalid_argument);
  }

  TEST_CASE("weighted winding sums") {
    const ClosedPolyline sq = close_vertices(oracle::square(1.0));
    ImpuritySample empty;
    CHECK(weighted_winding_sum(sq, empty, constant_weight(1.0), 1.0) == 0.0);
    ImpuritySample outside;
    outside.points = {{2.0, 2.0}, {-1.0, 0.5}, {0.5, 3.0}};
    outside.count = 3;
    CHECK(weighted_winding_sum(sq, outside, constant_weight(1.0), 1.0) == 0.0);
    ImpuritySample one;
    one.points = {{0.5, 0.5}};
    one.count = 1;
    CHECK(weighted_winding_sum(sq, one, constant_weight(1.0), 1.0) == 1.0);
    CHECK(weighted_winding_sum(sq.reversed(), one, constant_weight(3.0), 2.0) == -1.5);
    ImpuritySample on;
    on.points = {{0.5, 0.0}};
    on.count = 1;
    CHECK_THROWS_AS(weighted_winding_sum(sq, on, constant_weight(1.0), 1.0), OnCurveError);
    CHECK_THROWS_AS(weighted_winding_sum(sq, one, constant_weight(1.0), 0.0), std::invalid_argument);
  }

  TEST_CASE("simulate_xi agrees with a direct per-replica computation") {
    const Setup s = brownian_setup(1 << 10, 128, 3);
    ImpurityExperiment exp{50.0, constant_weight(1.0), make_weight("bump"), 1.0, s.field.grid.bbox, 20};
    const std::array<WeightFn, 2> ws{exp.f, make_weight("trig")};
    const XiReplicas rep = simulate_xi(exp, s.loop, ws, 99);
    REQUIRE(rep.xi.size() == 2);
    REQUIRE(rep.xi[0].size() == 20);
    CHECK(rep.discarded_replicas == 0);
    const XiReplicas again = simulate_xi(exp, s.loop, ws, 99);
    CHECK(again.xi == rep.xi);
    // Linearity in the weight: the same Poisson sample is shared across weights.
    const std::array<WeightFn, 1> combo{linear_combination(2.0, ws[0], -1.0, ws[1])};
    const XiReplicas lin = simulate_xi(exp, s.loop, combo, 99);
    for (std::size_t r = 0; r < 20; ++r)
      CHECK(lin.xi[0][r] == doctest::Approx(2.0 * rep.xi[0][r] - rep.xi[1][r]).epsilon(1e-12));
  }

  TEST_CASE("empirical CF trivial cases") {
    const Setup s = brownian_setup(1 << 10, 128, 4);
    ImpurityExperiment exp{100.0, constant_weight(1.0), constant_weight(0.0), 1.0, s.field.grid.bbox, 200};
    const CfEstimate zero_f = empirical_cf(exp, s.loop, 1);
    CHECK(zero_f.value == std::complex<double>(1.0, 0.0));
    CHECK(zero_f.se_re == 0.0);
    exp.f = constant_weight(1.0);
    exp.alpha = 0.0;
    CHECK(empirical_cf(exp, s.loop, 1).value == std::complex<double>(1.0, 0.0));
    exp.n_replicas = 99;
    CHECK_THROWS_AS(empirical_cf(exp, s.loop, 1), std::invalid_argument);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(cf_from_samples(one, 1.0), std::invalid_argument);
  }

  TEST_CASE("Campbell exponent closed forms") {
    const ClosedPolyline sq = close_vertices(oracle::square(1.0));
    const WindingField f = winding_field(sq, Grid::covering(sq, 64, 64));
    const CampbellCells cells = campbell_cells(f, constant_weight(0.7), constant_weight(2.0));
    const double A = static_cast<double>(cells.k.size()) * cells.cell_area;
    CHECK(A == doctest::Approx(1.0).epsilon(0.1));
    const double beta = 0.3;
    const CampbellResult r = campbell_cf(cells, beta, 5.0);
    const std::complex<double> expected = (std::exp(std::complex<double>(0.0, beta * 0.7)) - 1.0) * 2.0 * A;
    CHECK(std::abs(r.G - expected) < 1e-12);
    CHECK(std::abs(r.cf - std::exp(5.0 * expected)) < 1e-12);
    const CampbellResult zero = campbell_cf(cells, 0.0, 5.0);
    CHECK(zero.G == std::complex<double>(0.0, 0.0));
    CHECK(zero.cf == std::complex<double>(1.0, 0.0));
    CHECK_THROWS_AS(campbell_cf(cells, 0.1, 0.0), std::invalid_argument);
  }

  TEST_CASE("Campbell CF never exceeds modulus one") {
    const Setup s = brownian_setup(1 << 12, 256, 5);
    const CampbellCells cells = campbell_cells(s.field, make_weight("trig"), make_weight("bump"));
    for (double beta : {1e-3, 0.1, 1.0, 7.0})
      for (double lambda : {1.0, 100.0, 1e4}) {
        const CampbellResult r = campbell_cf(cells, beta, lambda);
        CHECK(r.G.real() <= 0.0);
        CHECK(std::abs(r.cf) <= 1.0 + 1e-15);
      }
  }

  TEST_CASE("Campbell identity on a small Brownian loop") {
    const Setup s = brownian_setup(1 << 10, 512, 6);
    const WeightFn f = make_weight("bump");
    const WeightFn g = constant_weight(1.0);
    const double lambda = 50.0;
    ImpurityExperiment exp{lambda, g, f, 1.0, s.field.grid.bbox, 4000};
    const CampbellCells cells = campbell_cells(s.field, f, g);
    const std::array<WeightFn, 1> ws{f};
    const XiReplicas rep = simulate_xi(exp, s.loop, ws, 7);
    for (double alpha : {0.5, 2.0}) {
      const CfEstimate e = cf_from_samples(rep.xi[0], alpha);
      const CampbellResult c = campbell_cf(cells, alpha / lambda, lambda);
      CHECK(std::abs(e.value.real() - c.cf.real()) <= 4.0 * e.se_re);
      CHECK(std::abs(e.value.imag() - c.cf.imag()) <= 4.0 * e.se_im);
    }
  }

  TEST_CASE("limit CF trivial cases") {
    const Setup s = brownian_setup(1 << 12, 256, 8);
    const WeightFn one = constant_weight(1.0);
    const LevelMeasures m1 = level_measures(s.field, one);
    const LevelMeasures m0 = level_measures(s.field, constant_weight(0.0));
    CHECK(limit_cf(s.path, m0, constant_weight(0.0), one, 2.0).value == std::complex<double>(1.0, 0.0));
    CHECK(limit_cf(s.path, m1, one, one, 0.0).value == std::complex<double>(1.0, 0.0));
    const LimitCf l = limit_cf(s.path, m1, one, one, 1.5);
    CHECK(l.occupation == doctest::Approx(1.0).epsilon(1e-14));
    const double reg = regularized_winding_integral(m1).value;
    CHECK(std::abs(l.value - std::exp(std::complex<double>(-0.75, 1.5 * reg))) < 1e-12);
    CHECK(occupation_integral(s.path, one) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("limit samples: zero when f lives away from the loop") {
    const Setup s = brownian_setup(1 << 10, 128, 9);
    const WeightFn f = make_weight("compact_bump", {{"cx", 50.0}, {"r", 1.0}});
    const WeightFn g = constant_weight(1.0);
    const LevelMeasures m = level_measures(s.field, product(f, g));
    for (double x : xi_limit_samples(s.path, regularized_winding_integral(m).value, f, g, 200, 3)) CHECK(x == 0.0);
    CHECK(xi_limit_sample(s.path, m, f, g, 3, 0) == 0.0);
  }

  TEST_CASE("limit samples: constant f g gives reg + (c / 2) Gamma_1") {
    const Setup s = brownian_setup(1 << 10, 512, 10);
    const WeightFn f = constant_weight(2.0);
    const WeightFn g = constant_weight(1.0);
    const LevelMeasures m = level_measures(s.field, product(f, g));
    const double reg = regularized_winding_integral(m).value;
    const auto xs = xi_limit_samples(s.path, reg, f, g, 10000, 4);
    const CauchyParams fit = fit_cauchy(xs);
    CHECK(std::abs(fit.scale - 1.0) <= 0.05);
    CHECK(std::abs(fit.position - reg) <= 0.05);
    CHECK(xi_limit_sample(s.path, m, f, g, 4, 17) == doctest::Approx(xs[17]).epsilon(1e-14));
  }

  TEST_CASE("limit samples fit the closed-form parameters") {
    const Setup s = brownian_setup(1 << 12, 1024, 11);
    const WeightFn f = make_weight("bump");
    const WeightFn g = constant_weight(1.0);
    const LimitCf l = limit_cf(s.path, level_measures(s.field, product(f, g)), f, g, 1.0);
    const CauchyParams fit = fit_cauchy(xi_limit_samples(s.path, l.regularized, f, g, 10000, 5));
    CHECK(std::abs(fit.position - l.regularized) <= 0.05);
    CHECK(std::abs(fit.scale - 0.5 * l.occupation) <= 0.05);
  }
}
