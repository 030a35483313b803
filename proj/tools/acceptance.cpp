// Acceptance runner: one PASS/FAIL line per criterion, with INFO diagnostics.
//   acceptance                 run every criterion
//   acceptance --criterion 4   run one
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "stogreen/cauchy.hpp"
#include "stogreen/experiments.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/random.hpp"
#include "stogreen/winding.hpp"

using namespace stogreen;
namespace ex = stogreen::experiments;

namespace {

constexpr std::uint64_t kSeed = 2024;

struct Outcome {
  bool passed{false};
  std::string summary;
};

std::string out_dir;

void info(const std::string& line) { std::cout << "  INFO " << line << '\n'; }

Vec2 uniform_in(Rng& rng, const Box& b) {
  return {b.xmin + uniform_open(rng) * b.width(), b.ymin + uniform_open(rng) * b.height()};
}

// Runs an experiment and folds the named checks (all when empty) into one outcome.
Outcome run_checks(ex::json cfg, const std::vector<std::string>& names) {
  cfg["master_seed"] = kSeed;
  cfg["plots"] = false;
  const ex::json resolved = ex::resolve_config(cfg);
  const ex::Artifacts a = ex::run_experiment(resolved);
  if (!out_dir.empty()) {
    const std::string sub = out_dir + "/" + resolved.at("experiment").get<std::string>();
    ex::write_artifacts(a, sub);
    info("artifacts in " + sub);
  }
  Outcome o{true, ""};
  int used = 0;
  for (const ex::Check& c : a.checks) {
    if (!names.empty() && std::find(names.begin(), names.end(), c.name) == names.end()) continue;
    ++used;
    info(std::string(c.passed ? "pass " : "fail ") + c.name + ": " + c.detail);
    o.passed = o.passed && c.passed;
    o.summary += (o.summary.empty() ? "" : ", ") + c.name + (c.passed ? " ok" : " failed");
  }
  for (const std::string& w : a.warnings) info("warning: " + w);
  if (used == 0) return {false, "no matching checks were produced"};
  return o;
}

Outcome additivity() {
  std::size_t probes = 0, violations = 0, on_curve = 0;
  Rng rng = make_rng(kSeed, 1);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const Path p = sample_bm(1 << 12, 1.0, {}, kSeed, s);
    const ClosedPolyline whole = close_path(p);
    const WindingLocator loc(whole);
    for (int level = 1; level <= 6; ++level) {
      const DyadicDecomposition d = dyadic_decompose(p, level);
      std::vector<WindingLocator> parts;
      for (const Path& sub : d.subpaths) parts.emplace_back(close_path(sub));
      const WindingLocator skel(close_path(d.skeleton));
      int done = 0;
      while (done < 200) {
        const Vec2 z = uniform_in(rng, whole.bounding_box());
        try {
          int sum = skel(z);
          for (const auto& part : parts) sum += part(z);
          violations += loc(z) != sum;
          ++done;
          ++probes;
        } catch (const OnCurveError&) {
          ++on_curve;
        }
      }
    }
  }
  info(std::to_string(probes) + " probes, " + std::to_string(on_curve) + " on-curve redraws");
  return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(probes) + " probes"};
}

Outcome scanline_oracle() {
  std::size_t mismatches = 0, checked = 0;
  Rng rng = make_rng(kSeed, 2);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const ClosedPolyline loop = close_path(sample_bridge(1 << 14, 1.0, {}, {}, kSeed, 100 + s));
    const WindingField f = winding_field(loop, Grid::covering(loop, 1024, 1024));
    int here = 0;
    while (here < 1000) {
      const int ix = static_cast<int>(rng() % static_cast<std::uint64_t>(f.grid.nx));
      const int iy = static_cast<int>(rng() % static_cast<std::uint64_t>(f.grid.ny));
      if (f.is_boundary(ix, iy)) continue;
      mismatches += f.at(ix, iy) != winding_number(loop, f.sample_point(ix, iy));
      ++here;
      ++checked;
    }
    if (s == 0) info("path 0: winding range [" + std::to_string(f.min_winding()) + ", " +
                     std::to_string(f.max_winding()) + "]");
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(checked) + " cells"};
}

Outcome cauchy_toolbox() {
  bool ok = true;
  std::ostringstream s;
  auto report = [&](const std::string& what, double value, double target, double tol) {
    const bool pass = std::abs(value - target) <= tol;
    ok = ok && pass;
    std::ostringstream l;
    l << (pass ? "pass " : "fail ") << what << ": " << value << " vs " << target << " +- " << tol;
    info(l.str());
  };

  const CauchyParams fit = fit_cauchy(sample_cauchy({0.0, 1.0}, 100000, kSeed, 1));
  report("fit position (1e5 samples)", fit.position, 0.0, 0.02);
  report("fit scale (1e5 samples)", fit.scale, 1.0, 0.02);

  const Path coarse = sample_bm(128, 1.0, {}, kSeed);
  const Path fine = sample_bm(1024, 1.0, {}, kSeed);
  std::vector<double> a, b;
  for (std::uint64_t r = 0; r < 100000; ++r) a.push_back(sample_cauchy_process(coarse.times, kSeed + 1, r).values.back());
  for (std::uint64_t r = 0; r < 20000; ++r) b.push_back(sample_cauchy_process(fine.times, kSeed + 2, r).values.back());
  const CauchyParams fa = fit_cauchy(a), fb = fit_cauchy(b);
  report("Gamma_1 scale, 128 steps", fa.scale, 1.0, 0.03);
  report("Gamma_1 scale, 1024 vs 128 steps", fb.scale, fa.scale, 0.05);
  report("Gamma_1 position, 1024 vs 128 steps", fb.position, fa.position, 0.05);

  const Path x = sample_bm(256, 1.0, {}, kSeed, 3);
  std::vector<double> h;
  for (const Vec2& z : x.points) h.push_back(std::cos(3.0 * z.x) * std::exp(-z.y * z.y));
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < h.size(); ++i) scale += std::abs(h[i]) * (x.times[i + 1] - x.times[i]);
  std::vector<double> draws;
  for (std::uint64_t r = 0; r < 10000; ++r) draws.push_back(young_integral(h, sample_cauchy_process(x.times, kSeed + 3, r)));
  report("young_integral conditional scale", fit_cauchy(draws).scale, scale, 0.05);

  return {ok, ok ? "all toolbox checks within tolerance" : "some toolbox checks out of tolerance"};
}

struct Criterion {
  int id;
  std::string name;
  std::function<Outcome()> run;
};

std::vector<Criterion> criteria() {
  using ex::json;
  return {
      {1, "winding additivity over dyadic decompositions", additivity},
      {2, "scanline field equals per-point winding", scanline_oracle},
      {3, "Werner asymptotics of D_N", [] { return run_checks({{"experiment", "werner"}}, {}); }},
      {4, "Green formula residual at K = 64",
       [] { return run_checks({{"experiment", "green"}, {"n_paths", 10}}, {}); }},
      {5, "Stratonovich schemes agree",
       [] { return run_checks({{"experiment", "strat_schemes"}, {"n_paths", 10}}, {}); }},
      {6, "Campbell exactness",
       [] {
         return run_checks({{"experiment", "impurities"}, {"checks", {"campbell"}}}, {"campbell_exactness"});
       }},
      {7, "approach to the limit characteristic function",
       [] {
         return run_checks({{"experiment", "impurities"},
                            {"lambda_list", {10.0, 100.0, 1000.0, 10000.0}},
                            {"monte_carlo", false},
                            {"checks", {"limit_approach"}}},
                           {"limit_approach"});
       }},
      {8, "magnetic expansion of G_beta",
       [] {
         return run_checks({{"experiment", "impurities"},
                            {"monte_carlo", false},
                            {"beta_list", {0.1, 0.01, 0.001}},
                            {"checks", {"magnetic_expansion"}}},
                           {"magnetic_expansion"});
       }},
      {9, "Cauchy limit of xi_lambda", [] { return run_checks({{"experiment", "cauchy_limit"}}, {}); }},
      {10, "joint tails stay bounded", [] { return run_checks({{"experiment", "joint"}}, {}); }},
      {11, "Cauchy toolbox", cauchy_toolbox},
  };
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run a single criterion (1-11)")->check(CLI::Range(1, 11));
  app.add_option("--out", out_dir, "write experiment artifacts here");
  CLI11_PARSE(app, argc, argv);

  bool all_ok = true;
  for (const Criterion& c : criteria()) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::ostringstream t;
    t.precision(3);
    t << secs;
    std::cout << "criterion " << c.id << ": " << (o.passed ? "PASS" : "FAIL") << " | " << c.name << " | "
              << o.summary << " | " << t.str() << " s" << std::endl;
    all_ok = all_ok && o.passed;
  }
  return all_ok ? 0 : 1;
}
