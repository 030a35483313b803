#include <doctest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stogreen/paths.hpp"

using namespace stogreen;

namespace {

double increment_variance(const Path& p) {
  double s = 0.0, s2 = 0.0;
  const std::size_t n = p.n_steps();
  for (std::size_t i = 1; i <= n; ++i) {
    const double d = p.points[i].x - p.points[i - 1].x;
    s += d;
    s2 += d * d;
  }
  const double m = s / n;
  return s2 / n - m * m;
}

}  // namespace

TEST_SUITE("paths") {
  TEST_CASE("sample_bm anchors the start and has the stored resolution") {
    const Path p = sample_bm(1 << 10, 1.0, {0.0, 0.0}, 7);
    CHECK(p.points.size() == 1025);
    CHECK(p.times.size() == 1025);
    CHECK(p.points[0] == Vec2{0.0, 0.0});
    CHECK(p.times.front() == 0.0);
    CHECK(p.times.back() == 1.0);
    CHECK(p.kind == PathKind::free);
    for (std::size_t i = 1; i < p.times.size(); ++i) CHECK(p.times[i] > p.times[i - 1]);
  }

  TEST_CASE("sample_bm increment variance matches the time step") {
    const std::size_t n = 1 << 20;
    const Path p = sample_bm(n, 1.0, {}, 11);
    CHECK(increment_variance(p) == doctest::Approx(1.0 / n).epsilon(0.01));
  }

  TEST_CASE("sample_bm scaling: horizon 4 quadruples the increment variance") {
    const std::size_t n = 1 << 20;
    const double ratio = increment_variance(sample_bm(n, 4.0, {}, 5)) / increment_variance(sample_bm(n, 1.0, {}, 5));
    CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
  }

  TEST_CASE("sample_bm is deterministic per seed and stream") {
    const Path a = sample_bm(256, 1.0, {1.0, 2.0}, 42, 3);
    const Path b = sample_bm(256, 1.0, {1.0, 2.0}, 42, 3);
    const Path c = sample_bm(256, 1.0, {1.0, 2.0}, 42, 4);
    CHECK(a.points == b.points);
    CHECK(a.times == b.times);
    CHECK(a.points != c.points);
    CHECK(a.seed_info.seed == 42);
    CHECK(a.seed_info.stream == 3);
  }

  TEST_CASE("sampling rejects bad arguments") {
    CHECK_THROWS_AS(sample_bm(1000, 1.0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_bm(1, 1.0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_bm(0, 1.0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_bm(64, 0.0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_bm(64, -1.0, {}, 1), std::invalid_argument);
    CHECK_THROWS_AS(sample_bridge(48, 1.0, {}, {}, 1), std::invalid_argument);
  }

  TEST_CASE("bridge with equal endpoints is an exactly pinned loop") {
    const Vec2 s{0.3, -1.7};
    const Path p = sample_bridge(1 << 12, 1.0, s, s, 9);
    CHECK(p.kind == PathKind::loop);
    CHECK(p.points.front() == s);
    CHECK(p.points.back() == s);
  }

  TEST_CASE("bridge to a distinct endpoint is pinned there") {
    const Vec2 e{1.0, 0.0};
    const Path p = sample_bridge(1 << 8, 2.0, {}, e, 9);
    CHECK(p.kind == PathKind::bridge);
    CHECK(p.points.back() == e);
    CHECK(p.times.back() == 2.0);
  }

  TEST_CASE("bridge mean and variance at interior times") {
    const int reps = 10000;
    const std::size_t n = 16;
    double sx[2] = {0, 0}, sx2[2] = {0, 0}, sy = 0.0;
    for (int r = 0; r < reps; ++r) {
      const Path p = sample_bridge(n, 1.0, {0.0, 0.0}, {1.0, 0.0}, 2024, static_cast<std::uint64_t>(r));
      const Vec2 half = p.points[n / 2];
      const Vec2 quarter = p.points[n / 4];
      sx[0] += half.x;
      sx2[0] += half.x * half.x;
      sx[1] += quarter.x;
      sx2[1] += quarter.x * quarter.x;
      sy += half.y;
    }
    const double mean_half = sx[0] / reps;
    const double var_half = sx2[0] / reps - mean_half * mean_half;
    const double mean_quarter = sx[1] / reps;
    const double var_quarter = sx2[1] / reps - mean_quarter * mean_quarter;

    const double se_mean = std::sqrt(0.25 / reps);
    CHECK(std::abs(mean_half - 0.5) < 3 * se_mean);
    CHECK(std::abs(sy / reps) < 3 * se_mean);
    CHECK(std::abs(mean_quarter - 0.25) < 3 * std::sqrt(0.1875 / reps));

    // SE of a Gaussian sample variance is sigma^2 sqrt(2 / n).
    const double v_half = oracle::conditioned_variance(0.5, 1.0);
    const double v_quarter = oracle::conditioned_variance(0.25, 1.0);
    CHECK(v_half == doctest::Approx(0.25));
    CHECK(std::abs(var_half - v_half) < 4 * v_half * std::sqrt(2.0 / reps));
    CHECK(std::abs(var_quarter - v_quarter) < 4 * v_quarter * std::sqrt(2.0 / reps));
  }

  TEST_CASE("close_path keeps loops and closes free paths") {
    const Path loop = sample_bridge(64, 1.0, {}, {}, 1);
    const ClosedPolyline cl = close_path(loop);
    CHECK(cl.source == ClosureSource::already_loop);
    CHECK(cl.vertices.size() == loop.points.size());

    const Path free = sample_bm(64, 1.0, {}, 1);
    const ClosedPolyline cf = close_path(free);
    CHECK(cf.source == ClosureSource::closed_by_segment);
    CHECK(cf.vertices.size() == free.points.size() + 1);
    CHECK(cf.vertices.back() == free.points.front());
    CHECK_FALSE(cf.degenerate);
  }

  TEST_CASE("closing a three point path gives four vertices") {
    const std::vector<Vec2> pts{{0, 0}, {1, 0}, {0, 1}};
    const ClosedPolyline c = close_vertices(pts);
    REQUIRE(c.vertices.size() == 4);
    CHECK(c.vertices[0] == c.vertices[3]);
    CHECK(c.n_segments() == 3);
  }

  TEST_CASE("degenerate paths are flagged") {
    Path p;
    p.times = {0.0, 0.5, 1.0};
    p.points = {{2, 2}, {2, 2}, {2, 2}};
    CHECK(close_path(p).degenerate);
    const std::vector<Vec2> one{{0, 0}};
    CHECK_THROWS_AS(close_vertices(one), std::invalid_argument);
  }

  TEST_CASE("polyline geometry helpers") {
    const auto sq = oracle::square(2.0, {1.0, -3.0});
    const ClosedPolyline c = close_vertices(sq);
    CHECK(c.signed_area() == doctest::Approx(4.0));
    CHECK(c.reversed().signed_area() == doctest::Approx(-4.0));
    CHECK(c.perimeter() == doctest::Approx(8.0));
    const Box b = c.bounding_box();
    CHECK(b.xmin == 1.0);
    CHECK(b.xmax == 3.0);
    CHECK(b.ymin == -3.0);
    CHECK(b.ymax == -1.0);

    const Path p = sample_bridge(1 << 10, 1.0, {}, {}, 3);
    CHECK(close_path(p).signed_area() == doctest::Approx(oracle::shoelace(p.points)).epsilon(1e-12));
  }

  TEST_CASE("dyadic level 0 is the single chord") {
    const Path p = sample_bm(256, 1.0, {}, 4);
    const DyadicDecomposition d = dyadic_decompose(p, 0);
    REQUIRE(d.skeleton.points.size() == 2);
    CHECK(d.skeleton.points[0] == p.points.front());
    CHECK(d.skeleton.points[1] == p.points.back());
    REQUIRE(d.subpaths.size() == 1);
    CHECK(d.subpaths[0].points == p.points);
  }

  TEST_CASE("dyadic full level splits into single segments") {
    const Path p = sample_bm(64, 1.0, {}, 4);
    const DyadicDecomposition d = dyadic_decompose(p, 6);
    CHECK(d.skeleton.points == p.points);
    REQUIRE(d.subpaths.size() == 64);
    for (const Path& s : d.subpaths) CHECK(s.points.size() == 2);
  }

  TEST_CASE("dyadic decomposition re-slices exactly at every level") {
    const Path p = sample_bridge(1 << 10, 1.0, {}, {}, 8);
    for (int level = 0; level <= 10; ++level) {
      const DyadicDecomposition d = dyadic_decompose(p, level);
      CHECK(d.flatten() == p.points);
      CHECK(d.skeleton.points.size() == (std::size_t{1} << level) + 1);
      for (std::size_t i = 0; i < d.subpaths.size(); ++i) {
        CHECK(d.subpaths[i].points.front() == d.skeleton.points[i]);
        CHECK(d.subpaths[i].points.back() == d.skeleton.points[i + 1]);
        CHECK(d.subpaths[i].times.front() == 0.0);
        if (i > 0) CHECK(d.subpaths[i].points.front() == d.subpaths[i - 1].points.back());
      }
    }
  }

  TEST_CASE("dyadic decomposition rejects inadmissible levels") {
    const Path p = sample_bm(64, 1.0, {}, 4);
    CHECK_THROWS_AS(dyadic_decompose(p, 7), std::invalid_argument);
    CHECK_THROWS_AS(dyadic_decompose(p, -1), std::invalid_argument);
  }

  TEST_CASE("reverse_path reverses points and keeps the time grid") {
    const Path p = sample_bm(32, 1.0, {}, 2);
    const Path r = reverse_path(p);
    CHECK(r.points.front() == p.points.back());
    CHECK(r.points.back() == p.points.front());
    CHECK(r.times.front() == 0.0);
    CHECK(r.times.back() == 1.0);
    CHECK(reverse_path(r).points == p.points);
  }

  TEST_CASE("path csv has a header and one row per sample") {
    const Path p = sample_bm(4, 1.0, {}, 2);
    std::ostringstream out;
    write_path_csv(out, p);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "t,x,y");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
  }
}
