#include "stogreen/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <sstream>

#include "stogreen/cauchy.hpp"
#include "stogreen/forms.hpp"
#include "stogreen/impurities.hpp"
#include "stogreen/paths.hpp"
#include "stogreen/random.hpp"
#include "stogreen/svg.hpp"
#include "stogreen/winding.hpp"

namespace stogreen::experiments {

namespace {

using cplx = std::complex<double>;

// ---------------------------------------------------------------------------
// Config plumbing

json weight_spec(const std::string& id, json params = json::object()) {
  return json{{"id", id}, {"params", std::move(params)}};
}

json default_pairs() {
  return json::array({
      json{{"f", weight_spec("constant")}, {"g", weight_spec("constant")}},
      json{{"f", weight_spec("bump")}, {"g", weight_spec("constant")}},
      json{{"f", weight_spec("trig")}, {"g", weight_spec("bump")}},
  });
}

json default_forms() { return json::array({weight_spec("area"), weight_spec("bump"), weight_spec("trig")}); }

json defaults_for(const std::string& name) {
  auto path = [](const std::string& kind, int n) { return json{{"kind", kind}, {"n_steps", n}}; };
  auto grid = [](int n) { return json{{"nx", n}, {"ny", n}, {"padding", 2}}; };
  if (name == "green")
    return {{"path", path("loop", 1 << 14)},
            {"grid", grid(2048)},
            {"n_paths", 1},
            {"forms", default_forms()},
            {"K_list", {1, 2, 4, 8, 16, 32, 64}},
            {"modes", {"clamp", "zero"}},
            {"tolerance", {{"relative", 0.05}, {"gap_factor", 5.0}, {"shoelace_factor", 2.0}}}};
  if (name == "werner")
    return {{"path", path("loop", 1 << 16)}, {"grid", grid(2048)}, {"n_paths", 20},
            {"N_min", 10},                   {"N_max", 30},        {"band", {0.8, 1.2}}};
  if (name == "lp_moments")
    return {{"path", path("loop", 1 << 16)}, {"grid", grid(2048)}, {"n_paths", 20},
            {"N_min", 1},                    {"N_max", 30},        {"p_list", {1.0, 2.0}}};
  if (name == "joint")
    return {{"path", path("loop", 1 << 16)}, {"grid", grid(2048)}, {"n_pairs", 10},
            {"n_min", 5},                    {"n_max", 25},        {"factor", 5.0}};
  if (name == "impurities")
    return {{"path", path("loop", 1 << 12)},
            {"grid", grid(2048)},
            {"pairs", default_pairs()},
            {"lambda_list", {10.0, 100.0, 1000.0}},
            {"alpha_list", {0.5, 1.0, 2.0}},
            {"n_replicas", 10000},
            {"n_max", kDefaultNMax},
            {"monte_carlo", true},
            {"checks", {"campbell"}},
            {"beta_list", {0.1, 0.01, 0.001}},
            {"limit_ratio", 1.0 / 3.0},
            {"expansion_ratio", 0.5},
            {"cramer_wold",
             {{"f1", weight_spec("bump")},
              {"f2", weight_spec("trig")},
              {"g", weight_spec("constant")},
              {"lambda", 100.0},
              {"t_grid", {{1.0, 0.0}, {0.0, 1.0}, {1.0, 1.0}, {0.5, -1.0}}}}}};
  if (name == "cauchy_limit")
    return {{"path", path("loop", 1 << 12)},
            {"grid", grid(2048)},
            {"f", weight_spec("constant")},
            {"g", weight_spec("constant")},
            {"lambda", 1000.0},
            {"n_replicas", 10000},
            {"n_limit_samples", 10000},
            {"n_max", kDefaultNMax},
            {"tolerance", 0.05},
            {"tail", {{"xs", {10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0, 100.0}},
                      {"n_samples", 1000000},
                      {"max_variation", 0.3}}}};
  if (name == "strat_schemes")
    return {{"path", path("bm", 1 << 16)}, {"n_paths", 1},           {"forms", default_forms()},
            {"min_level", 6},              {"compare_level", 14},     {"gap_factor", 10.0},
            {"exact_tolerance", 1e-12}};
  throw ConfigError("unknown experiment '" + name + "'");
}

// Recursively fill missing keys of `into` from `defaults`.
void merge_defaults(json& into, const json& defaults) {
  for (auto it = defaults.begin(); it != defaults.end(); ++it) {
    if (!into.contains(it.key()))
      into[it.key()] = it.value();
    else if (it.value().is_object() && into[it.key()].is_object() && it.key() != "params")
      merge_defaults(into[it.key()], it.value());
  }
}

template <class T>
T need(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": '" + key + "' has the wrong type");
  }
}

Vec2 to_vec(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigError(where + ": expected a point [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Params to_params(const json& j, const std::string& where) {
  Params p;
  if (j.is_null()) return p;
  if (!j.is_object()) throw ConfigError(where + ": params must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!it.value().is_number()) throw ConfigError(where + ": param '" + it.key() + "' must be a number");
    p[it.key()] = it.value().get<double>();
  }
  return p;
}

json normalize_catalog_entry(const json& j, const std::string& where) {
  if (j.is_string()) return weight_spec(j.get<std::string>());
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string())
    throw ConfigError(where + ": expected {\"id\": ..., \"params\": {...}}");
  json out = j;
  if (!out.contains("params")) out["params"] = json::object();
  return out;
}

WeightFn weight_from(const json& j, const std::string& where) {
  try {
    return make_weight(j.at("id").get<std::string>(), to_params(j.at("params"), where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

OneForm form_from(const json& j, const std::string& where) {
  try {
    return make_form(j.at("id").get<std::string>(), to_params(j.at("params"), where));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ": " + e.what());
  }
}

void validate_path_spec(json& p) {
  const auto kind = need<std::string>(p, "kind", "path");
  if (!p.contains("horizon")) p["horizon"] = 1.0;
  if (!p.contains("start")) p["start"] = {0.0, 0.0};
  if (!(need<double>(p, "horizon", "path") > 0.0)) throw ConfigError("path: horizon must be positive");
  to_vec(p["start"], "path.start");
  if (kind == "polygon") {
    if (!p.contains("vertices") || !p["vertices"].is_array() || p["vertices"].size() < 2)
      throw ConfigError("path: polygon needs at least 2 vertices");
    for (const json& v : p["vertices"]) to_vec(v, "path.vertices");
    if (!is_power_of_two(p["vertices"].size() - 1))
      throw ConfigError("path: polygon vertex count minus one must be a power of two");
    p["n_steps"] = p["vertices"].size() - 1;
    return;
  }
  if (kind != "loop" && kind != "bm" && kind != "bridge")
    throw ConfigError("path: kind must be one of loop, bm, bridge, polygon");
  const auto n = need<long long>(p, "n_steps", "path");
  if (n < 2 || !is_power_of_two(static_cast<std::size_t>(n)))
    throw ConfigError("path: n_steps must be a power of two >= 2");
  if (kind == "bridge") {
    if (!p.contains("end")) p["end"] = {1.0, 0.0};
    to_vec(p["end"], "path.end");
  }
}

void validate_grid_spec(const json& g) {
  const int nx = need<int>(g, "nx", "grid");
  const int ny = need<int>(g, "ny", "grid");
  const int pad = need<int>(g, "padding", "grid");
  if (nx < 16 || ny < 16) throw ConfigError("grid: nx and ny must be >= 16");
  if (pad < 2 || 2 * pad + 2 >= std::min(nx, ny)) throw ConfigError("grid: padding must be >= 2 and fit the grid");
}

void require_positive_int(const json& c, const std::string& key) {
  if (need<long long>(c, key, c["experiment"].get<std::string>()) < 1)
    throw ConfigError("'" + key + "' must be a positive integer");
}

// ---------------------------------------------------------------------------
// Helpers shared by the runners

std::uint64_t master_seed(const json& c) { return c.at("master_seed").get<std::uint64_t>(); }

Path make_path(const json& p, std::uint64_t seed, std::uint64_t stream) {
  const std::string kind = p.at("kind");
  const double T = p.at("horizon");
  const Vec2 start = to_vec(p.at("start"), "path.start");
  if (kind == "polygon") {
    Path path;
    const auto& vs = p.at("vertices");
    const std::size_t n = vs.size() - 1;
    for (std::size_t i = 0; i <= n; ++i) {
      path.times.push_back(i == n ? T : T * static_cast<double>(i) / static_cast<double>(n));
      path.points.push_back(to_vec(vs[i], "path.vertices"));
    }
    path.horizon = T;
    path.kind = path.points.front() == path.points.back() ? PathKind::loop : PathKind::free;
    return path;
  }
  const auto n = p.at("n_steps").get<std::size_t>();
  if (kind == "bm") return sample_bm(n, T, start, seed, stream);
  if (kind == "bridge") return sample_bridge(n, T, start, to_vec(p.at("end"), "path.end"), seed, stream);
  return sample_bridge(n, T, start, start, seed, stream);
}

Grid make_grid(const json& g, const Box& box) {
  return Grid::covering(box, g.at("nx").get<int>(), g.at("ny").get<int>(), g.at("padding").get<int>());
}

Box union_box(const Box& a, const Box& b) {
  return {std::min(a.xmin, b.xmin), std::max(a.xmax, b.xmax), std::min(a.ymin, b.ymin), std::max(a.ymax, b.ymax)};
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double m = *mid;
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
  return m;
}

std::string fmt(double v) { return format_number(v); }
std::string fmt(long long v) { return std::to_string(v); }

std::string describe(double value, const char* op, double bound) {
  std::ostringstream s;
  s.precision(6);
  s << value << ' ' << op << ' ' << bound;
  return s.str();
}

void add_check(Artifacts& a, std::string name, bool passed, std::string detail) {
  a.checks.push_back({std::move(name), passed, std::move(detail)});
}

// ---------------------------------------------------------------------------
// green

void run_green(const json& c, Artifacts& a) {
  const auto seed = master_seed(c);
  const auto K_list = c.at("K_list").get<std::vector<int>>();
  const auto& tol = c.at("tolerance");
  const double rel = tol.at("relative"), gap_factor = tol.at("gap_factor"), shoe = tol.at("shoelace_factor");
  const bool polygon = c.at("path").at("kind") == "polygon";

  std::vector<OneForm> forms;
  for (const json& f : c.at("forms")) forms.push_back(form_from(f, "forms"));
  std::vector<TruncationMode> modes;
  for (const json& m : c.at("modes")) modes.push_back(m == "zero" ? TruncationMode::zero : TruncationMode::clamp);

  Table table{"green.csv", {"path", "form", "mode", "K", "truncated", "rhs", "residual"}, {}};
  struct Worst {
    double ratio{0.0};
    bool passed{true};
  };
  std::map<std::string, Worst> worst;
  json per_path = json::array();
  std::vector<svg::Series> residual_series;

  const int n_paths = c.at("n_paths");
  for (int r = 0; r < n_paths; ++r) {
    const Path path = make_path(c.at("path"), seed, static_cast<std::uint64_t>(r));
    const ClosedPolyline loop = close_path(path);
    const WindingField field = winding_field(loop, make_grid(c.at("grid"), loop.bounding_box()));
    if (r == 0) a.plots.push_back({"winding_field.svg", svg::heatmap(field, "winding field, path 0")});
    json pj{{"path", r}, {"shoelace_area", loop.signed_area()}, {"perimeter", loop.perimeter()},
            {"max_winding", field.max_winding()}, {"min_winding", field.min_winding()}, {"forms", json::array()}};

    for (const OneForm& form : forms) {
      for (TruncationMode mode : modes) {
        const std::string mode_name = mode == TruncationMode::zero ? "zero" : "clamp";
        const GreenReport rep = green_residual(path, form, field, K_list, mode);
        const double gap = polygon ? 0.0 : rep.stratonovich_gap;
        const double threshold = std::max(rel * (std::abs(rep.stratonovich) + 0.1), gap_factor * gap);
        const double resid = rep.final_residual();
        bool ok = resid <= threshold;
        json fj{{"form", form.id},
                {"mode", mode_name},
                {"stratonovich", rep.stratonovich},
                {"stratonovich_gap", rep.stratonovich_gap},
                {"closing_segment", rep.closing_segment},
                {"rhs", rep.rhs},
                {"final_residual", resid},
                {"threshold", threshold}};
        if (form.id == "area") {
          const double grid_tol = shoe * rep.cell_size * rep.perimeter;
          const double lhs_err = std::abs(rep.rows.back().truncated - rep.shoelace_area);
          const double rhs_err = std::abs(rep.rhs - rep.shoelace_area);
          fj["shoelace_lhs_error"] = lhs_err;
          fj["shoelace_rhs_error"] = rhs_err;
          fj["shoelace_tolerance"] = grid_tol;
          ok = ok && lhs_err <= grid_tol && rhs_err <= grid_tol;
        }
        pj["forms"].push_back(fj);
        Worst& w = worst[form.id + "/" + mode_name];
        w.ratio = std::max(w.ratio, threshold > 0.0 ? resid / threshold : (resid > 0.0 ? INFINITY : 0.0));
        w.passed = w.passed && ok;

        svg::Series s{form.id + " " + mode_name, {}, {}};
        for (const GreenRow& row : rep.rows) {
          table.rows.push_back({fmt(static_cast<long long>(r)), form.id, mode_name,
                                fmt(static_cast<long long>(row.K)), fmt(row.truncated), fmt(rep.rhs),
                                fmt(row.residual)});
          s.x.push_back(row.K);
          s.y.push_back(row.residual);
        }
        if (r == 0) residual_series.push_back(std::move(s));
      }
    }
    per_path.push_back(pj);
  }
  for (const auto& [key, w] : worst)
    add_check(a, "green_residual/" + key, w.passed, "worst residual / threshold = " + fmt(w.ratio));
  a.summary["results"] = {{"paths", per_path}};
  a.tables.push_back(std::move(table));
  a.plots.push_back({"residual_vs_K.svg",
                     svg::line_plot({"Green residual vs K (path 0)", "K", "residual", true, true}, residual_series)});
}

// ---------------------------------------------------------------------------
// werner / lp_moments

struct TailAreas {
  std::vector<std::vector<double>> pos;  // [replica][N]
  std::vector<std::vector<double>> neg;
  int max_abs_winding{0};
};

TailAreas loop_tail_areas(const json& c, int n_paths, int N_max) {
  TailAreas t;
  const auto seed = master_seed(c);
  const WeightFn one = constant_weight(1.0);
  for (int r = 0; r < n_paths; ++r) {
    const ClosedPolyline loop = close_path(make_path(c.at("path"), seed, static_cast<std::uint64_t>(r)));
    const WindingField field = winding_field(loop, make_grid(c.at("grid"), loop.bounding_box()));
    const LevelMeasures m = level_measures(field, one, N_max + 1);
    t.pos.push_back(m.areas_pos);
    t.neg.push_back(m.areas_neg);
    t.max_abs_winding = std::max({t.max_abs_winding, std::abs(field.max_winding()), std::abs(field.min_winding())});
  }
  return t;
}

void run_werner(const json& c, Artifacts& a) {
  const int n_paths = c.at("n_paths"), N_min = c.at("N_min"), N_max = c.at("N_max");
  const double lo = c.at("band")[0], hi = c.at("band")[1];
  const TailAreas t = loop_tail_areas(c, n_paths, N_max);

  Table table{"werner.csv", {"N", "mean_scaled_pos", "se_scaled_pos", "mean_scaled_neg", "mean_abs_dev"}, {}};
  std::vector<double> scaled_mean(static_cast<std::size_t>(N_max) + 1), abs_dev(static_cast<std::size_t>(N_max) + 1);
  svg::Series s_pos{"2 pi N D_N", {}, {}}, s_neg{"2 pi N D_-N", {}, {}};
  for (int N = 1; N <= N_max; ++N) {
    const double target = 1.0 / (2.0 * std::numbers::pi * N);
    double sp = 0.0, sp2 = 0.0, sn = 0.0, dev = 0.0;
    for (int r = 0; r < n_paths; ++r) {
      const double v = t.pos[static_cast<std::size_t>(r)][static_cast<std::size_t>(N)] / target;
      sp += v;
      sp2 += v * v;
      sn += t.neg[static_cast<std::size_t>(r)][static_cast<std::size_t>(N)] / target;
      dev += std::abs(t.pos[static_cast<std::size_t>(r)][static_cast<std::size_t>(N)] - target);
    }
    const double n = n_paths;
    const double mean = sp / n;
    const double se = n > 1 ? std::sqrt(std::max(0.0, sp2 / n - mean * mean) / (n - 1)) : 0.0;
    scaled_mean[static_cast<std::size_t>(N)] = mean;
    abs_dev[static_cast<std::size_t>(N)] = dev / n;
    table.rows.push_back({fmt(static_cast<long long>(N)), fmt(mean), fmt(se), fmt(sn / n), fmt(dev / n)});
    s_pos.x.push_back(N);
    s_pos.y.push_back(mean);
    s_neg.x.push_back(N);
    s_neg.y.push_back(sn / n);
  }
  double band_mean = 0.0;
  for (int N = N_min; N <= N_max; ++N) band_mean += scaled_mean[static_cast<std::size_t>(N)];
  band_mean /= (N_max - N_min + 1);
  add_check(a, "werner_band", band_mean >= lo && band_mean <= hi,
            "mean of 2 pi N D_N over N in [" + std::to_string(N_min) + ", " + std::to_string(N_max) +
                "] = " + fmt(band_mean) + ", band [" + fmt(lo) + ", " + fmt(hi) + "]");
  const double dev_lo = abs_dev[static_cast<std::size_t>(N_min)], dev_hi = abs_dev[static_cast<std::size_t>(N_max)];
  add_check(a, "werner_deviation_decreases", dev_hi < dev_lo,
            "mean |D_N - 1/(2 pi N)|: " + fmt(dev_lo) + " at N=" + std::to_string(N_min) + ", " + fmt(dev_hi) +
                " at N=" + std::to_string(N_max));
  if (t.max_abs_winding < N_max)
    a.warnings.push_back("largest |winding| on any grid is " + std::to_string(t.max_abs_winding) +
                         "; D_N is identically zero beyond it at this path and grid resolution");
  a.summary["results"] = {{"band_mean", band_mean},
                          {"max_abs_winding", t.max_abs_winding},
                          {"mean_abs_dev_N_min", dev_lo},
                          {"mean_abs_dev_N_max", dev_hi}};
  a.tables.push_back(std::move(table));
  a.plots.push_back({"werner.svg", svg::line_plot({"scaled tail areas", "N", "2 pi N |D_N|", false, false},
                                                  {s_pos, s_neg, {"target", {1.0, double(N_max)}, {1.0, 1.0}}})});
}

void run_lp_moments(const json& c, Artifacts& a) {
  const int n_paths = c.at("n_paths"), N_min = c.at("N_min"), N_max = c.at("N_max");
  const auto p_list = c.at("p_list").get<std::vector<double>>();
  const TailAreas t = loop_tail_areas(c, n_paths, N_max);
  Table table{"lp_moments.csv", {"N", "p", "moment", "N_times_moment"}, {}};
  std::vector<svg::Series> series;
  json results = json::array();
  for (double p : p_list) {
    svg::Series s{"p = " + fmt(p), {}, {}};
    for (int N = N_min; N <= N_max; ++N) {
      const double target = 1.0 / (2.0 * std::numbers::pi * N);
      double acc = 0.0;
      for (int r = 0; r < n_paths; ++r)
        acc += std::pow(std::abs(t.pos[static_cast<std::size_t>(r)][static_cast<std::size_t>(N)] - target), p);
      const double moment = std::pow(acc / n_paths, 1.0 / p);
      table.rows.push_back({fmt(static_cast<long long>(N)), fmt(p), fmt(moment), fmt(N * moment)});
      results.push_back({{"N", N}, {"p", p}, {"moment", moment}});
      s.x.push_back(N);
      s.y.push_back(moment);
    }
    series.push_back(std::move(s));
  }
  if (t.max_abs_winding < N_max)
    a.warnings.push_back("largest |winding| on any grid is " + std::to_string(t.max_abs_winding) +
                         "; moments beyond it only measure 1/(2 pi N)");
  a.summary["results"] = {{"moments", results}, {"max_abs_winding", t.max_abs_winding}};
  a.tables.push_back(std::move(table));
  a.plots.push_back({"lp_moments.svg",
                     svg::line_plot({"L^p deviation of D_N from 1/(2 pi N)", "N", "moment", true, true}, series)});
}

// ---------------------------------------------------------------------------
// joint

void run_joint(const json& c, Artifacts& a) {
  const auto seed = master_seed(c);
  const int n_pairs = c.at("n_pairs"), n_min = c.at("n_min"), n_max = c.at("n_max");
  const double factor = c.at("factor");
  Table table{"joint.csv", {"pair", "n", "joint_area", "n2_joint_area"}, {}};
  int failed = 0, degenerate = 0;
  json pairs = json::array();
  std::vector<svg::Series> series;
  for (int r = 0; r < n_pairs; ++r) {
    const ClosedPolyline x = close_path(make_path(c.at("path"), seed, 2 * static_cast<std::uint64_t>(r)));
    const ClosedPolyline y = close_path(make_path(c.at("path"), seed, 2 * static_cast<std::uint64_t>(r) + 1));
    const Grid grid = make_grid(c.at("grid"), union_box(x.bounding_box(), y.bounding_box()));
    const WindingField fx = winding_field(x, grid);
    const WindingField fy = winding_field(y, grid);
    std::vector<double> scaled;
    svg::Series s{"pair " + std::to_string(r), {}, {}};
    for (int n = n_min; n <= n_max; ++n) {
      const double area = joint_tail_area(fx, fy, n);
      scaled.push_back(double(n) * n * area);
      table.rows.push_back(
          {fmt(static_cast<long long>(r)), fmt(static_cast<long long>(n)), fmt(area), fmt(scaled.back())});
      s.x.push_back(n);
      s.y.push_back(scaled.back());
    }
    const double med = median_of(scaled);
    const double mx = *std::max_element(scaled.begin(), scaled.end());
    const bool degen = !(med > 0.0);
    const bool ok = !degen && mx <= factor * med;
    degenerate += degen;
    failed += !ok;
    pairs.push_back({{"pair", r}, {"median", med}, {"max", mx}, {"degenerate", degen}, {"passed", ok}});
    if (r < 4) series.push_back(std::move(s));
  }
  add_check(a, "joint_bounded", failed == 0,
            std::to_string(n_pairs - failed) + "/" + std::to_string(n_pairs) + " pairs with max <= " + fmt(factor) +
                " x median (" + std::to_string(degenerate) + " degenerate with zero median)");
  if (degenerate > 0)
    a.warnings.push_back(std::to_string(degenerate) +
                         " pairs have no common high-winding cells; the boundedness check is vacuous for them");
  a.summary["results"] = {{"pairs", pairs}};
  a.tables.push_back(std::move(table));
  a.plots.push_back(
      {"joint.svg", svg::line_plot({"n^2 joint tail area", "n", "n^2 |D_n ∩ D'_n|", false, false}, series)});
}

// ---------------------------------------------------------------------------
// impurities

struct LoopSetup {
  Path path;
  ClosedPolyline loop;
  WindingField field;
};

LoopSetup make_loop_setup(const json& c) {
  LoopSetup s;
  s.path = make_path(c.at("path"), master_seed(c), 0);
  s.loop = close_path(s.path);
  s.field = winding_field(s.loop, make_grid(c.at("grid"), s.loop.bounding_box()));
  return s;
}

bool within_se(cplx diff, const CfEstimate& e, double k = 3.0) {
  return std::abs(diff.real()) <= k * e.se_re && std::abs(diff.imag()) <= k * e.se_im;
}

void run_impurities(const json& c, Artifacts& a) {
  const auto seed = master_seed(c);
  const LoopSetup setup = make_loop_setup(c);
  const auto lambdas = c.at("lambda_list").get<std::vector<double>>();
  const auto alphas = c.at("alpha_list").get<std::vector<double>>();
  const auto checks = c.at("checks").get<std::vector<std::string>>();
  const bool mc = c.at("monte_carlo");
  const int n_max = c.at("n_max");
  const auto wants = [&](const std::string& name) {
    return std::find(checks.begin(), checks.end(), name) != checks.end();
  };

  const Box window = setup.field.grid.bbox;
  a.plots.push_back({"winding_field.svg", svg::heatmap(setup.field, "winding field of the loop")});
  json pair_results = json::array();
  std::size_t campbell_total = 0, campbell_fail = 0;
  bool limit_ok = true, expansion_ok = true;
  std::string limit_detail, expansion_detail;

  for (std::size_t pi = 0; pi < c.at("pairs").size(); ++pi) {
    const json& pj = c.at("pairs")[pi];
    const WeightFn f = weight_from(pj.at("f"), "pairs.f");
    const WeightFn g = weight_from(pj.at("g"), "pairs.g");
    const std::string tag = "pair" + std::to_string(pi);
    const LevelMeasures fg = level_measures(setup.field, product(f, g), n_max);
    const CampbellCells cells = campbell_cells(setup.field, f, g);
    ImpurityExperiment exp{1.0, g, f, 1.0, window, c.at("n_replicas").get<int>()};

    Table table{"impurities_" + tag + ".csv",
                {"lambda", "alpha", "re_ecf", "im_ecf", "se", "re_campbell", "im_campbell", "re_limit", "im_limit"},
                {}};
    std::map<double, std::vector<double>> limit_gap;  // alpha -> |exp(lambda G) - limit| per lambda
    std::vector<svg::Series> plot{{"Re ECF", {}, {}}, {"Re Campbell", {}, {}}, {"Re limit", {}, {}}};
    const double plot_alpha = alphas[alphas.size() / 2];
    LimitCf lim_info{};
    std::size_t discarded = 0, resampled = 0;

    for (std::size_t li = 0; li < lambdas.size(); ++li) {
      const double lambda = lambdas[li];
      exp.rho = lambda;
      XiReplicas rep;
      if (mc) {
        const std::array<WeightFn, 1> ws{f};
        rep = simulate_xi(exp, setup.loop, ws, derive_seed(seed, 0x1000 + 64 * pi + li));
        discarded += rep.discarded_replicas;
        resampled += rep.resampled_points;
      }
      for (double alpha : alphas) {
        const CampbellResult camp = campbell_cf(cells, alpha / lambda, lambda);
        lim_info = limit_cf(setup.path, fg, f, g, alpha);
        CfEstimate ecf{cplx(NAN, NAN), NAN, NAN, 0};
        if (mc) {
          ecf = cf_from_samples(rep.xi[0], alpha);
          ++campbell_total;
          if (!within_se(ecf.value - camp.cf, ecf)) ++campbell_fail;
        }
        limit_gap[alpha].push_back(std::abs(camp.cf - lim_info.value));
        table.rows.push_back({fmt(lambda), fmt(alpha), fmt(ecf.value.real()), fmt(ecf.value.imag()),
                              fmt(std::max(ecf.se_re, ecf.se_im)), fmt(camp.cf.real()), fmt(camp.cf.imag()),
                              fmt(lim_info.value.real()), fmt(lim_info.value.imag())});
        if (alpha == plot_alpha) {
          plot[0].x.push_back(lambda);
          plot[0].y.push_back(ecf.value.real());
          plot[1].x.push_back(lambda);
          plot[1].y.push_back(camp.cf.real());
          plot[2].x.push_back(lambda);
          plot[2].y.push_back(lim_info.value.real());
        }
      }
    }
    if (lim_info.convergence_warning)
      a.warnings.push_back(tag + ": regularized integral of f g did not show decaying differences");
    if (discarded > 0) a.warnings.push_back(tag + ": " + std::to_string(discarded) + " replicas discarded");

    json pr{{"pair", pi},
            {"f", pj.at("f")},
            {"g", pj.at("g")},
            {"regularized_fg", lim_info.regularized},
            {"occupation_abs_f_g", lim_info.occupation},
            {"resampled_points", resampled},
            {"discarded_replicas", discarded}};

    json gaps = json::object();
    for (const auto& [alpha, v] : limit_gap) {
      const bool ok = v.back() <= c.at("limit_ratio").get<double>() * v.front();
      gaps[fmt(alpha)] = v;
      limit_ok = limit_ok && ok;
      limit_detail += tag + " alpha=" + fmt(alpha) + ": gap " +
                      describe(v.back(), ok ? "<=" : ">", c.at("limit_ratio").get<double>() * v.front()) +
                      " (ratio x first gap); ";
    }
    pr["limit_gap_by_alpha"] = gaps;

    if (wants("magnetic_expansion")) {
      Table mt{"expansion_" + tag + ".csv", {"beta", "re_G", "im_G", "re_linear", "im_linear", "error_over_beta"}, {}};
      std::vector<double> errs;
      for (double beta : c.at("beta_list").get<std::vector<double>>()) {
        const cplx G = campbell_cf(cells, beta, 1.0).G;
        const cplx lin(-0.5 * std::abs(beta) * lim_info.occupation, beta * lim_info.regularized);
        errs.push_back(std::abs(G - lin) / std::abs(beta));
        mt.rows.push_back({fmt(beta), fmt(G.real()), fmt(G.imag()), fmt(lin.real()), fmt(lin.imag()),
                           fmt(errs.back())});
      }
      const bool ok = errs.back() <= c.at("expansion_ratio").get<double>() * errs.front();
      expansion_ok = expansion_ok && ok;
      expansion_detail += tag + ": error/beta at smallest beta " +
                          describe(errs.back(), ok ? "<=" : ">", c.at("expansion_ratio").get<double>() * errs.front()) +
                          " (ratio x value at largest beta); ";
      pr["expansion_error_over_beta"] = errs;
      a.tables.push_back(std::move(mt));
    }
    pair_results.push_back(pr);
    a.tables.push_back(std::move(table));
    a.plots.push_back({"cf_vs_lambda_" + tag + ".svg",
                       svg::line_plot({"CF vs lambda, " + f.id + " / " + g.id + ", alpha = " + fmt(plot_alpha),
                                       "lambda", "real part", true, false},
                                      plot)});
  }

  if (wants("campbell")) {
    if (!mc) throw ConfigError("impurities: the campbell check needs monte_carlo = true");
    add_check(a, "campbell_exactness", campbell_fail == 0,
              std::to_string(campbell_total - campbell_fail) + "/" + std::to_string(campbell_total) +
                  " (lambda, alpha, pair) rows within 3 SE componentwise");
  }
  if (wants("limit_approach")) add_check(a, "limit_approach", limit_ok, limit_detail);
  if (wants("magnetic_expansion")) add_check(a, "magnetic_expansion", expansion_ok, expansion_detail);

  if (wants("cramer_wold")) {
    const json& cw = c.at("cramer_wold");
    const WeightFn f1 = weight_from(cw.at("f1"), "cramer_wold.f1");
    const WeightFn f2 = weight_from(cw.at("f2"), "cramer_wold.f2");
    const WeightFn g = weight_from(cw.at("g"), "cramer_wold.g");
    const double lambda = cw.at("lambda");
    ImpurityExperiment exp{lambda, g, f1, 1.0, window, c.at("n_replicas").get<int>()};
    const std::array<WeightFn, 2> ws{f1, f2};
    const XiReplicas rep = simulate_xi(exp, setup.loop, ws, derive_seed(seed, 0x2000));
    Table t{"cramer_wold.csv",
            {"t1", "t2", "re_ecf", "im_ecf", "se", "re_campbell", "im_campbell", "re_limit", "im_limit"},
            {}};
    int fails = 0;
    for (const json& tt : cw.at("t_grid")) {
      const double t1 = tt.at(0), t2 = tt.at(1);
      std::vector<double> mix(rep.xi[0].size());
      for (std::size_t r = 0; r < mix.size(); ++r) mix[r] = t1 * rep.xi[0][r] + t2 * rep.xi[1][r];
      const CfEstimate ecf = cf_from_samples(mix, 1.0);
      const WeightFn fc = linear_combination(t1, f1, t2, f2);
      const CampbellResult camp = campbell_cf(setup.field, fc, g, 1.0 / lambda, lambda);
      const LimitCf lim = limit_cf(setup.path, level_measures(setup.field, product(fc, g), n_max), fc, g, 1.0);
      if (!within_se(ecf.value - camp.cf, ecf)) ++fails;
      t.rows.push_back({fmt(t1), fmt(t2), fmt(ecf.value.real()), fmt(ecf.value.imag()),
                        fmt(std::max(ecf.se_re, ecf.se_im)), fmt(camp.cf.real()), fmt(camp.cf.imag()),
                        fmt(lim.value.real()), fmt(lim.value.imag())});
    }
    add_check(a, "cramer_wold_campbell", fails == 0,
              std::to_string(cw.at("t_grid").size() - static_cast<std::size_t>(fails)) + "/" +
                  std::to_string(cw.at("t_grid").size()) + " (t1, t2) points within 3 SE");
    a.tables.push_back(std::move(t));
  }
  a.summary["results"] = {{"pairs", pair_results},
                          {"window", {window.xmin, window.xmax, window.ymin, window.ymax}},
                          {"loop_area", setup.loop.signed_area()},
                          {"max_winding", setup.field.max_winding()},
                          {"min_winding", setup.field.min_winding()}};
}

// ---------------------------------------------------------------------------
// cauchy_limit

void run_cauchy_limit(const json& c, Artifacts& a) {
  const auto seed = master_seed(c);
  const LoopSetup setup = make_loop_setup(c);
  const WeightFn f = weight_from(c.at("f"), "f");
  const WeightFn g = weight_from(c.at("g"), "g");
  const double lambda = c.at("lambda"), tol = c.at("tolerance");
  const Box window = setup.field.grid.bbox;

  const LimitCf lim = limit_cf(setup.path, level_measures(setup.field, product(f, g), c.at("n_max").get<int>()), f,
                               g, 1.0);
  const CauchyParams target{lim.regularized, 0.5 * lim.occupation};

  ImpurityExperiment exp{lambda, g, f, 1.0, window, c.at("n_replicas").get<int>()};
  const std::array<WeightFn, 1> ws{f};
  const XiReplicas rep = simulate_xi(exp, setup.loop, ws, derive_seed(seed, 0x3000));
  const CauchyParams fit = fit_cauchy(rep.xi[0]);
  const std::vector<double> limit_samples =
      xi_limit_samples(setup.path, lim.regularized, f, g, c.at("n_limit_samples").get<std::size_t>(),
                       derive_seed(seed, 0x3001));
  const CauchyParams fit_lim = fit_cauchy(limit_samples);

  Table params{"cauchy_limit.csv", {"source", "position", "scale"}, {}};
  params.rows.push_back({"target", fmt(target.position), fmt(target.scale)});
  params.rows.push_back({"xi_lambda", fmt(fit.position), fmt(fit.scale)});
  params.rows.push_back({"xi_limit_samples", fmt(fit_lim.position), fmt(fit_lim.scale)});

  // Tail of n_X(P) with P drawn from |f| on the window.
  const json& tail = c.at("tail");
  const auto xs = tail.at("xs").get<std::vector<double>>();
  const auto n_tail = tail.at("n_samples").get<std::size_t>();
  const double sup = f.sup_bound.value_or(1.0);
  const WindingLocator locator(setup.loop);
  Rng rng = make_rng(seed, 0x3002);
  std::vector<double> windings;
  windings.reserve(n_tail);
  while (windings.size() < n_tail) {
    const Vec2 z{window.xmin + uniform_open(rng) * window.width(),
                 window.ymin + uniform_open(rng) * window.height()};
    if (uniform_open(rng) * sup >= std::abs(f(z))) continue;
    try {
      windings.push_back(locator(z));
    } catch (const OnCurveError&) {
    }
  }
  const TailProfile prof = tail_profile(windings, xs);
  Table tail_table{"tail.csv", {"x", "x_tail"}, {}};
  for (std::size_t i = 0; i < prof.x.size(); ++i) tail_table.rows.push_back({fmt(prof.x[i]), fmt(prof.x_tail[i])});

  const double pos_err = std::abs(fit.position - target.position);
  const double scale_err = std::abs(fit.scale - target.scale);
  add_check(a, "cauchy_limit_position", pos_err <= tol,
            "fitted " + fmt(fit.position) + " vs target " + fmt(target.position) + ": error " +
                describe(pos_err, pos_err <= tol ? "<=" : ">", tol));
  add_check(a, "cauchy_limit_scale", scale_err <= tol,
            "fitted " + fmt(fit.scale) + " vs target " + fmt(target.scale) + ": error " +
                describe(scale_err, scale_err <= tol ? "<=" : ">", tol));
  add_check(a, "strong_domain_tail", prof.relative_variation <= tail.at("max_variation").get<double>(),
            "relative variation of x P(n >= x) = " + fmt(prof.relative_variation));
  if (lim.convergence_warning) a.warnings.push_back("regularized integral of f g did not show decaying differences");
  if (rep.discarded_replicas > 0) a.warnings.push_back(std::to_string(rep.discarded_replicas) + " replicas discarded");

  a.summary["results"] = {{"target", {{"position", target.position}, {"scale", target.scale}}},
                          {"xi_lambda_fit", {{"position", fit.position}, {"scale", fit.scale}}},
                          {"xi_limit_fit", {{"position", fit_lim.position}, {"scale", fit_lim.scale}}},
                          {"tail_relative_variation", prof.relative_variation},
                          {"max_winding", setup.field.max_winding()},
                          {"replicas_used", rep.xi[0].size()}};
  a.tables.push_back(std::move(params));
  a.tables.push_back(std::move(tail_table));
  a.plots.push_back({"tail.svg", svg::line_plot({"strong-domain tail signature", "x", "x P(n >= x)", true, false},
                                                {{"empirical", prof.x, prof.x_tail}})});
}

// ---------------------------------------------------------------------------
// strat_schemes

void run_strat_schemes(const json& c, Artifacts& a) {
  const auto seed = master_seed(c);
  const int n_paths = c.at("n_paths"), min_level = c.at("min_level"), cmp = c.at("compare_level");
  const double factor = c.at("gap_factor"), exact_tol = c.at("exact_tolerance");
  std::vector<OneForm> forms;
  for (const json& f : c.at("forms")) forms.push_back(form_from(f, "forms"));

  Table table{"strat.csv", {"path", "form", "level", "I1", "I2", "I3"}, {}};
  std::map<std::string, std::pair<int, int>> tally;  // form -> (passed, total)
  std::map<std::string, double> worst;
  std::vector<svg::Series> series;
  for (int r = 0; r < n_paths; ++r) {
    const Path path = make_path(c.at("path"), seed, static_cast<std::uint64_t>(r));
    const int top = max_dyadic_level(path);
    if (cmp >= top || cmp < min_level || top < 2)
      throw ConfigError("strat_schemes: need min_level <= compare_level < log2(n_steps)");
    for (const OneForm& form : forms) {
      std::map<int, std::array<double, 3>> I;
      for (int level = min_level; level <= top; ++level) {
        I[level] = {stratonovich_approx(form, path, level, StratScheme::midpoint_I1),
                    stratonovich_approx(form, path, level, StratScheme::trapezoid_I2),
                    stratonovich_approx(form, path, level, StratScheme::chord_I3)};
        table.rows.push_back({fmt(static_cast<long long>(r)), form.id, fmt(static_cast<long long>(level)),
                              fmt(I[level][0]), fmt(I[level][1]), fmt(I[level][2])});
      }
      bool ok = true;
      double ratio = 0.0;
      if (form.id == "area") {
        for (const auto& [level, v] : I) {
          const double scale = std::max(1.0, std::abs(v[0]));
          const double d = std::max(std::abs(v[0] - v[1]), std::abs(v[0] - v[2])) / scale;
          ratio = std::max(ratio, d / exact_tol);
          ok = ok && d <= exact_tol;
        }
      } else {
        for (int k : {1, 2}) {
          const double gap1 = std::abs(I[top][0] - I[top - 1][0]);
          const double gapk = std::abs(I[top][static_cast<std::size_t>(k)] - I[top - 1][static_cast<std::size_t>(k)]);
          const double thr = factor * std::min(gap1, gapk);
          const double d = std::abs(I[cmp][0] - I[cmp][static_cast<std::size_t>(k)]);
          ratio = std::max(ratio, thr > 0.0 ? d / thr : INFINITY);
          ok = ok && d < thr;
        }
      }
      auto& [passed, total] = tally[form.id];
      passed += ok;
      ++total;
      worst[form.id] = std::max(worst[form.id], ratio);
      if (r == 0) {
        svg::Series s{form.id, {}, {}};
        for (const auto& [level, v] : I) {
          s.x.push_back(level);
          s.y.push_back(std::abs(v[0] - v[1]));
        }
        series.push_back(std::move(s));
      }
    }
  }
  for (const auto& [id, pt] : tally)
    add_check(a, "strat_schemes/" + id, pt.first == pt.second,
              std::to_string(pt.first) + "/" + std::to_string(pt.second) +
                  " paths pass; worst difference / threshold = " + fmt(worst[id]));
  a.summary["results"] = {{"worst_ratio", worst}};
  a.tables.push_back(std::move(table));
  a.plots.push_back({"strat_I1_minus_I2.svg",
                     svg::line_plot({"|I1 - I2| by level (path 0)", "level", "|I1 - I2|", false, true}, series)});
}

}  // namespace

bool Artifacts::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

json resolve_config(const json& raw) {
  if (!raw.is_object()) throw ConfigError("config must be a JSON object");
  json c = raw;
  const auto name = need<std::string>(c, "experiment", "config");
  if (std::find(kExperiments.begin(), kExperiments.end(), name) == kExperiments.end())
    throw ConfigError("unknown experiment '" + name + "'");
  if (!c.contains("master_seed") || !c["master_seed"].is_number_integer() || c["master_seed"].get<long long>() < 0)
    throw ConfigError("config: 'master_seed' must be a nonnegative integer");
  if (!c.contains("output_dir")) c["output_dir"] = "out";
  if (!c.contains("plots")) c["plots"] = true;
  merge_defaults(c, defaults_for(name));

  if (name != "strat_schemes") validate_grid_spec(c["grid"]);
  validate_path_spec(c["path"]);

  auto normalize_list = [&](const std::string& key) {
    if (!c[key].is_array() || c[key].empty()) throw ConfigError("'" + key + "' must be a nonempty array");
    for (json& e : c[key]) e = normalize_catalog_entry(e, key);
  };
  auto need_numbers = [&](const std::string& key, bool positive) {
    if (!c[key].is_array() || c[key].empty()) throw ConfigError("'" + key + "' must be a nonempty array");
    for (const json& v : c[key]) {
      if (!v.is_number()) throw ConfigError("'" + key + "' must contain numbers");
      if (positive && !(v.get<double>() > 0.0)) throw ConfigError("'" + key + "' entries must be positive");
    }
  };

  if (name == "green" || name == "strat_schemes") {
    normalize_list("forms");
    for (const json& f : c["forms"]) form_from(f, "forms");
    require_positive_int(c, "n_paths");
  }
  if (name == "green") {
    need_numbers("K_list", true);
    for (const json& m : c["modes"])
      if (m != "clamp" && m != "zero") throw ConfigError("modes: expected clamp or zero");
    for (const json& K : c["K_list"])
      if (!K.is_number_integer()) throw ConfigError("K_list: entries must be integers");
  }
  if (name == "werner" || name == "lp_moments") {
    require_positive_int(c, "n_paths");
    const int lo = need<int>(c, "N_min", name), hi = need<int>(c, "N_max", name);
    if (lo < 1 || hi < lo) throw ConfigError(name + ": need 1 <= N_min <= N_max");
    if (name == "lp_moments") need_numbers("p_list", true);
  }
  if (name == "joint") {
    require_positive_int(c, "n_pairs");
    const int lo = need<int>(c, "n_min", name), hi = need<int>(c, "n_max", name);
    if (lo < 1 || hi < lo) throw ConfigError("joint: need 1 <= n_min <= n_max");
  }
  if (name == "impurities") {
    need_numbers("lambda_list", true);
    need_numbers("alpha_list", false);
    need_numbers("beta_list", true);
    if (!c["pairs"].is_array() || c["pairs"].empty()) throw ConfigError("'pairs' must be a nonempty array");
    for (json& p : c["pairs"]) {
      p["f"] = normalize_catalog_entry(p.value("f", json()), "pairs.f");
      p["g"] = normalize_catalog_entry(p.value("g", json()), "pairs.g");
      weight_from(p["f"], "pairs.f");
      if (!weight_from(p["g"], "pairs.g").sup_bound) throw ConfigError("pairs.g: weight has no sup bound");
    }
    for (const json& ch : c["checks"])
      if (ch != "campbell" && ch != "limit_approach" && ch != "magnetic_expansion" && ch != "cramer_wold")
        throw ConfigError("impurities: unknown check " + ch.dump());
    json& cw = c["cramer_wold"];
    for (const char* k : {"f1", "f2", "g"}) {
      cw[k] = normalize_catalog_entry(cw[k], std::string("cramer_wold.") + k);
      weight_from(cw[k], std::string("cramer_wold.") + k);
    }
    if (c["monte_carlo"].get<bool>() && need<int>(c, "n_replicas", name) < 100)
      throw ConfigError("impurities: n_replicas must be >= 100");
  }
  if (name == "cauchy_limit") {
    c["f"] = normalize_catalog_entry(c["f"], "f");
    c["g"] = normalize_catalog_entry(c["g"], "g");
    if (!weight_from(c["f"], "f").sup_bound || !weight_from(c["g"], "g").sup_bound)
      throw ConfigError("cauchy_limit: f and g need catalog sup bounds");
    if (need<int>(c, "n_replicas", name) < 100 || need<int>(c, "n_limit_samples", name) < 100)
      throw ConfigError("cauchy_limit: n_replicas and n_limit_samples must be >= 100");
    if (!(need<double>(c, "lambda", name) > 0.0)) throw ConfigError("cauchy_limit: lambda must be positive");
  }
  if ((name == "impurities" || name == "cauchy_limit") && need<int>(c, "n_max", name) < 1)
    throw ConfigError("n_max must be >= 1");
  return c;
}

Artifacts run_experiment(const json& config) {
  Artifacts a;
  const std::string name = config.at("experiment");
  a.summary["experiment"] = name;
  a.summary["config"] = config;
  if (name == "green") run_green(config, a);
  else if (name == "werner") run_werner(config, a);
  else if (name == "lp_moments") run_lp_moments(config, a);
  else if (name == "joint") run_joint(config, a);
  else if (name == "impurities") run_impurities(config, a);
  else if (name == "cauchy_limit") run_cauchy_limit(config, a);
  else if (name == "strat_schemes") run_strat_schemes(config, a);
  else throw ConfigError("unknown experiment '" + name + "'");

  json checks = json::array();
  for (const Check& ch : a.checks) checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
  a.summary["checks"] = checks;
  a.summary["warnings"] = a.warnings;
  a.summary["passed"] = a.passed();
  json files = json::array();
  for (const Table& t : a.tables) files.push_back(t.file);
  if (config.value("plots", true))
    for (const Plot& p : a.plots) files.push_back(p.file);
  a.summary["artifacts"] = files;
  return a;
}

void write_artifacts(const Artifacts& artifacts, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& file) {
    std::ofstream out(dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (dir / file).string());
    return out;
  };
  for (const Table& t : artifacts.tables) {
    std::ofstream out = open(t.file);
    for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
    out << '\n';
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
      out << '\n';
    }
  }
  if (artifacts.summary.at("config").value("plots", true))
    for (const Plot& p : artifacts.plots) open(p.file) << p.content;
  open("summary.json") << artifacts.summary.dump(2) << '\n';
}

}  // namespace stogreen::experiments
