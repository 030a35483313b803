#include "stogreen/forms.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace stogreen {

namespace {

struct GaussLegendre16 {
  std::array<double, 16> nodes{};    // on [0, 1]
  std::array<double, 16> weights{};  // sum to 1

  GaussLegendre16() {
    constexpr int n = 16;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      nodes[static_cast<std::size_t>(i)] = 0.5 * (1.0 - x);
      weights[static_cast<std::size_t>(i)] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
  }
};

const GaussLegendre16& gl16() {
  static const GaussLegendre16 rule;
  return rule;
}

Params with_defaults(const std::string& id, const Params& given, const Params& defaults) {
  Params out = defaults;
  for (const auto& [k, v] : given) {
    if (!defaults.contains(k)) throw std::invalid_argument("unknown parameter '" + k + "' for '" + id + "'");
    if (!std::isfinite(v)) throw std::invalid_argument("parameter '" + k + "' must be finite");
    out[k] = v;
  }
  return out;
}

double sq(double x) { return x * x; }

}  // namespace

WeightFn OneForm::curl_weight() const {
  std::optional<double> sup;
  if (id == "area") sup = 1.0;
  else if (id == "bump") sup = 2.0 / sq(params.at("s"));
  else if (id == "trig") sup = std::abs(params.at("a"));
  return WeightFn{"curl:" + id, curl, sup, std::nullopt};
}

OneForm make_form(const std::string& id, const Params& params) {
  OneForm form;
  form.id = id;
  if (id == "area") {
    form.params = with_defaults(id, params, {});
    form.eta1 = [](Vec2 z) { return -0.5 * z.y; };
    form.eta2 = [](Vec2 z) { return 0.5 * z.x; };
    form.d1_eta2 = [](Vec2) { return 0.5; };
    form.d2_eta1 = [](Vec2) { return -0.5; };
    form.curl = [](Vec2) { return 1.0; };
  } else if (id == "bump") {
    form.params = with_defaults(id, params, {{"cx", 0.0}, {"cy", 0.0}, {"s", 0.5}});
    const double cx = form.params["cx"], cy = form.params["cy"], s = form.params["s"];
    if (!(s > 0.0)) throw std::invalid_argument("bump form needs s > 0");
    const double s2 = s * s, s4 = s2 * s2;
    auto phi = [=](Vec2 z) { return std::exp(-(sq(z.x - cx) + sq(z.y - cy)) / (2.0 * s2)); };
    form.eta1 = [=](Vec2 z) { return (z.y - cy) / s2 * phi(z); };   // -d2 phi
    form.eta2 = [=](Vec2 z) { return -(z.x - cx) / s2 * phi(z); };  //  d1 phi
    form.d1_eta2 = [=](Vec2 z) { return phi(z) * (sq(z.x - cx) / s4 - 1.0 / s2); };
    form.d2_eta1 = [=](Vec2 z) { return -phi(z) * (sq(z.y - cy) / s4 - 1.0 / s2); };
    form.curl = [=](Vec2 z) { return phi(z) * ((sq(z.x - cx) + sq(z.y - cy)) / s4 - 2.0 / s2); };
  } else if (id == "trig") {
    form.params = with_defaults(id, params, {{"a", 3.0}, {"b", 2.0}});
    const double a = form.params["a"], b = form.params["b"];
    form.eta1 = [](Vec2) { return 0.0; };
    form.eta2 = [=](Vec2 z) { return std::sin(a * z.x) * std::cos(b * z.y); };
    form.d1_eta2 = [=](Vec2 z) { return a * std::cos(a * z.x) * std::cos(b * z.y); };
    form.d2_eta1 = [](Vec2) { return 0.0; };
    form.curl = [=](Vec2 z) { return a * std::cos(a * z.x) * std::cos(b * z.y); };
  } else {
    throw std::invalid_argument("unknown form id '" + id + "'");
  }
  return form;
}

OneForm combine(double alpha, const OneForm& eta, double beta, const OneForm& other) {
  OneForm out;
  out.id = "combination(" + eta.id + "," + other.id + ")";
  auto mix = [alpha, beta](ScalarField f, ScalarField g) -> ScalarField {
    return [=](Vec2 z) { return alpha * f(z) + beta * g(z); };
  };
  out.eta1 = mix(eta.eta1, other.eta1);
  out.eta2 = mix(eta.eta2, other.eta2);
  out.d1_eta2 = mix(eta.d1_eta2, other.d1_eta2);
  out.d2_eta1 = mix(eta.d2_eta1, other.d2_eta1);
  out.curl = mix(eta.curl, other.curl);
  out.smoothness = std::min(eta.smoothness, other.smoothness);
  return out;
}

WeightFn make_weight(const std::string& id, const Params& params) {
  if (id.starts_with("curl:")) return make_form(id.substr(5), params).curl_weight();
  if (id == "constant") {
    const Params p = with_defaults(id, params, {{"value", 1.0}});
    WeightFn w = constant_weight(p.at("value"));
    return w;
  }
  if (id == "bump") {
    const Params p = with_defaults(id, params, {{"cx", 0.0}, {"cy", 0.0}, {"s", 0.5}, {"amplitude", 1.0}});
    const double cx = p.at("cx"), cy = p.at("cy"), s = p.at("s"), amp = p.at("amplitude");
    if (!(s > 0.0)) throw std::invalid_argument("bump weight needs s > 0");
    return WeightFn{id, [=](Vec2 z) { return amp * std::exp(-(sq(z.x - cx) + sq(z.y - cy)) / (2.0 * s * s)); },
                    std::abs(amp), std::nullopt};
  }
  if (id == "compact_bump") {
    const Params p = with_defaults(id, params, {{"cx", 0.0}, {"cy", 0.0}, {"r", 0.5}, {"amplitude", 1.0}});
    const double cx = p.at("cx"), cy = p.at("cy"), r = p.at("r"), amp = p.at("amplitude");
    if (!(r > 0.0)) throw std::invalid_argument("compact_bump weight needs r > 0");
    return WeightFn{id,
                    [=](Vec2 z) {
                      const double u = (sq(z.x - cx) + sq(z.y - cy)) / (r * r);
                      return u < 1.0 ? amp * sq(1.0 - u) : 0.0;
                    },
                    std::abs(amp), std::nullopt};
  }
  if (id == "trig") {
    const Params p = with_defaults(id, params, {{"a", 3.0}, {"b", 2.0}});
    const double a = p.at("a"), b = p.at("b");
    return WeightFn{id, [=](Vec2 z) { return std::cos(a * z.x) * std::cos(b * z.y); }, 1.0, std::nullopt};
  }
  if (id == "affine_saturated") {
    const Params p = with_defaults(id, params, {{"c0", 1.0}, {"cx", 0.0}, {"cy", 0.0}, {"lo", 0.0}, {"hi", 2.0}});
    const double c0 = p.at("c0"), ax = p.at("cx"), ay = p.at("cy"), lo = p.at("lo"), hi = p.at("hi");
    if (lo > hi) throw std::invalid_argument("affine_saturated needs lo <= hi");
    return WeightFn{id, [=](Vec2 z) { return std::clamp(c0 + ax * z.x + ay * z.y, lo, hi); },
                    std::max(std::abs(lo), std::abs(hi)), std::hypot(ax, ay)};
  }
  throw std::invalid_argument("unknown weight id '" + id + "'");
}

WeightFn product(const WeightFn& f, const WeightFn& g) {
  std::optional<double> sup;
  if (f.sup_bound && g.sup_bound) sup = *f.sup_bound * *g.sup_bound;
  auto fv = f.value;
  auto gv = g.value;
  return WeightFn{f.id + "*" + g.id, [fv, gv](Vec2 z) { return fv(z) * gv(z); }, sup, std::nullopt};
}

WeightFn linear_combination(double a, const WeightFn& f, double b, const WeightFn& g) {
  std::optional<double> sup;
  if (f.sup_bound && g.sup_bound) sup = std::abs(a) * *f.sup_bound + std::abs(b) * *g.sup_bound;
  auto fv = f.value;
  auto gv = g.value;
  return WeightFn{"lincomb(" + f.id + "," + g.id + ")", [=](Vec2 z) { return a * fv(z) + b * gv(z); }, sup,
                  std::nullopt};
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double line_integral_exact(const OneForm& form, std::span<const Vec2> vertices) {
  if (vertices.size() < 2) throw std::invalid_argument("line integral needs at least 2 vertices");
  const auto& rule = gl16();
  std::vector<double> terms(vertices.size() - 1);
  for (std::size_t s = 0; s + 1 < vertices.size(); ++s) {
    const Vec2 a = vertices[s];
    const Vec2 d = vertices[s + 1] - a;
    if (d.x == 0.0 && d.y == 0.0) {
      terms[s] = 0.0;
      continue;
    }
    double acc = 0.0;
    for (std::size_t q = 0; q < 16; ++q) {
      const Vec2 p = a + rule.nodes[q] * d;
      acc += rule.weights[q] * (form.eta1(p) * d.x + form.eta2(p) * d.y);
    }
    terms[s] = acc;
  }
  return pairwise_sum(terms);
}

double line_integral_exact(const OneForm& form, const ClosedPolyline& loop) {
  return line_integral_exact(form, std::span<const Vec2>(loop.vertices));
}

int max_dyadic_level(const Path& path) {
  int level = 0;
  std::size_t n = path.n_steps();
  while (n % 2 == 0 && n > 1) {
    n /= 2;
    ++level;
  }
  return level;
}

double stratonovich_approx(const OneForm& form, const Path& path, int level, StratScheme scheme) {
  const DyadicDecomposition dec = dyadic_decompose(path, level);
  const auto& pts = dec.skeleton.points;
  if (scheme == StratScheme::chord_I3) return line_integral_exact(form, std::span<const Vec2>(pts));

  std::vector<double> terms(pts.size() - 1);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 a = pts[i];
    const Vec2 b = pts[i + 1];
    const Vec2 d = b - a;
    if (scheme == StratScheme::midpoint_I1) {
      const Vec2 m = 0.5 * (a + b);
      terms[i] = form.eta1(m) * d.x + form.eta2(m) * d.y;
    } else {
      terms[i] = 0.5 * ((form.eta1(a) + form.eta1(b)) * d.x + (form.eta2(a) + form.eta2(b)) * d.y);
    }
  }
  return pairwise_sum(terms);
}

GreenReport green_residual(const Path& path, const OneForm& form, const WindingField& field,
                           std::span<const int> K_list, TruncationMode mode) {
  if (K_list.empty()) throw std::invalid_argument("K_list must not be empty");
  const int k_top = *std::max_element(K_list.begin(), K_list.end());
  const LevelMeasures m = level_measures(field, form.curl_weight(), std::max(kDefaultNMax, k_top));

  const ClosedPolyline loop = close_path(path);
  GreenReport r;
  r.form_id = form.id;
  r.mode = mode;
  const int top = max_dyadic_level(path);
  r.stratonovich = stratonovich_approx(form, path, top, StratScheme::chord_I3);
  r.stratonovich_gap = top > 0 ? std::abs(r.stratonovich - stratonovich_approx(form, path, top - 1, StratScheme::chord_I3))
                               : 0.0;
  const std::array<Vec2, 2> closing{path.end(), path.start()};
  r.closing_segment = line_integral_exact(form, std::span<const Vec2>(closing));
  r.rhs = r.stratonovich + r.closing_segment;
  r.shoelace_area = loop.signed_area();
  r.cell_size = std::max(field.grid.dx(), field.grid.dy());
  r.perimeter = loop.perimeter();
  for (int K : K_list) {
    const double t = truncated_winding_integral(m, K, mode);
    r.rows.push_back({K, t, std::abs(t - r.rhs)});
  }
  return r;
}

GreenReport green_residual(const Path& path, const OneForm& form, const Grid& grid, std::span<const int> K_list,
                           TruncationMode mode) {
  return green_residual(path, form, winding_field(close_path(path), grid), K_list, mode);
}

}  // namespace stogreen
