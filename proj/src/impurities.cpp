#include "stogreen/impurities.hpp"

#include <array>
#include <cmath>
#include <random>
#include <stdexcept>

#include "stogreen/cauchy.hpp"
#include "stogreen/forms.hpp"
#include "stogreen/random.hpp"

namespace stogreen {

namespace {

constexpr int kMaxRedraws = 10;

Vec2 draw_point(const ImpurityExperiment& exp, double sup, Rng& rng) {
  const Box& w = exp.window;
  for (;;) {
    const Vec2 z{w.xmin + uniform_open(rng) * w.width(), w.ymin + uniform_open(rng) * w.height()};
    if (uniform_open(rng) * sup < exp.g(z)) return z;
  }
}

double g_sup(const ImpurityExperiment& exp) {
  if (!exp.g.sup_bound) throw std::invalid_argument("impurity density '" + exp.g.id + "' has no sup bound");
  return *exp.g.sup_bound;
}

}  // namespace

void validate(const ImpurityExperiment& exp) {
  if (!(exp.rho > 0.0) || !std::isfinite(exp.rho)) throw std::invalid_argument("rho must be positive");
  if (!(exp.window.width() > 0.0 && exp.window.height() > 0.0)) throw std::invalid_argument("empty window");
  g_sup(exp);
  Rng rng = make_rng(0x5eed, 0);
  for (int i = 0; i < 10000; ++i) {
    const Vec2 z{exp.window.xmin + uniform_open(rng) * exp.window.width(),
                 exp.window.ymin + uniform_open(rng) * exp.window.height()};
    if (exp.g(z) < 0.0) throw std::invalid_argument("impurity density '" + exp.g.id + "' takes negative values");
  }
}

double window_integral(const WeightFn& g, const Box& window) {
  static constexpr std::array<double, 4> nodes{0.0694318442029737, 0.3300094782075719, 0.6699905217924281,
                                               0.9305681557970263};
  static constexpr std::array<double, 4> weights{0.1739274225687269, 0.3260725774312731, 0.3260725774312731,
                                                 0.1739274225687269};
  constexpr int panels = 64;
  const double hx = window.width() / panels;
  const double hy = window.height() / panels;
  double total = 0.0;
  for (int py = 0; py < panels; ++py)
    for (int px = 0; px < panels; ++px) {
      double acc = 0.0;
      for (std::size_t j = 0; j < 4; ++j)
        for (std::size_t i = 0; i < 4; ++i)
          acc += weights[i] * weights[j] *
                 g(Vec2{window.xmin + (px + nodes[i]) * hx, window.ymin + (py + nodes[j]) * hy});
      total += acc;
    }
  return total * hx * hy;
}

ImpuritySample sample_impurities(const ImpurityExperiment& exp, std::uint64_t seed, std::uint64_t stream) {
  const double sup = g_sup(exp);
  ImpuritySample sample;
  const double mass = window_integral(exp.g, exp.window);
  if (!(mass > 0.0) || !(sup > 0.0)) {
    sample.empty_intensity = true;
    return sample;
  }
  Rng rng = make_rng(seed, stream);
  std::poisson_distribution<std::size_t> count(exp.rho * mass);
  sample.count = count(rng);
  sample.points.reserve(sample.count);
  for (std::size_t i = 0; i < sample.count; ++i) sample.points.push_back(draw_point(exp, sup, rng));
  return sample;
}

double weighted_winding_sum(const WindingLocator& locator, std::span<const Vec2> points, const WeightFn& f,
                            double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  double acc = 0.0;
  for (const Vec2& z : points) {
    const int n = locator(z);
    if (n != 0) acc += f(z) * n;
  }
  return acc / lambda;
}

double weighted_winding_sum(const ClosedPolyline& loop, const ImpuritySample& sample, const WeightFn& f,
                            double lambda) {
  return weighted_winding_sum(WindingLocator(loop), sample.points, f, lambda);
}

XiReplicas simulate_xi(const ImpurityExperiment& exp, const ClosedPolyline& loop, std::span<const WeightFn> weights,
                       std::uint64_t seed) {
  validate(exp);
  const double sup = g_sup(exp);
  const double mass = window_integral(exp.g, exp.window);
  const WindingLocator locator(loop);
  const std::size_t n_rep = static_cast<std::size_t>(exp.n_replicas);
  const std::size_t n_w = weights.size();

  std::vector<double> values(n_rep * n_w, 0.0);
  std::vector<std::uint8_t> discarded(n_rep, 0);
  std::vector<std::size_t> redraws(n_rep, 0);

#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t r = 0; r < n_rep; ++r) {
    Rng rng = make_rng(seed, r);
    std::size_t count = 0;
    if (mass > 0.0 && sup > 0.0) count = std::poisson_distribution<std::size_t>(exp.rho * mass)(rng);
    std::vector<double> acc(n_w, 0.0);
    for (std::size_t i = 0; i < count && !discarded[r]; ++i) {
      Vec2 z = draw_point(exp, sup, rng);
      int n = 0;
      for (int attempt = 0;; ++attempt) {
        try {
          n = locator(z);
          break;
        } catch (const OnCurveError&) {
          if (attempt == kMaxRedraws) {
            discarded[r] = 1;
            break;
          }
          ++redraws[r];
          z = draw_point(exp, sup, rng);
        }
      }
      if (n == 0) continue;
      for (std::size_t j = 0; j < n_w; ++j) acc[j] += weights[j](z) * n;
    }
    for (std::size_t j = 0; j < n_w; ++j) values[j * n_rep + r] = acc[j] / exp.rho;
  }

  XiReplicas out;
  out.xi.resize(n_w);
  for (std::size_t r = 0; r < n_rep; ++r) {
    out.resampled_points += redraws[r];
    if (discarded[r]) {
      ++out.discarded_replicas;
      continue;
    }
    for (std::size_t j = 0; j < n_w; ++j) out.xi[j].push_back(values[j * n_rep + r]);
  }
  return out;
}

CfEstimate cf_from_samples(std::span<const double> xs, double alpha) {
  if (xs.size() < 2) throw std::invalid_argument("need at least two samples for a CF estimate");
  double sc = 0.0, ss = 0.0, sc2 = 0.0, ss2 = 0.0;
  for (double x : xs) {
    const double c = std::cos(alpha * x);
    const double s = std::sin(alpha * x);
    sc += c;
    ss += s;
    sc2 += c * c;
    ss2 += s * s;
  }
  const double n = static_cast<double>(xs.size());
  const double mc = sc / n;
  const double ms = ss / n;
  CfEstimate e;
  e.value = {mc, ms};
  e.se_re = std::sqrt(std::max(0.0, sc2 / n - mc * mc) / (n - 1.0));
  e.se_im = std::sqrt(std::max(0.0, ss2 / n - ms * ms) / (n - 1.0));
  e.replicas = xs.size();
  return e;
}

CfEstimate empirical_cf(const ImpurityExperiment& exp, const ClosedPolyline& loop, std::uint64_t seed) {
  if (exp.n_replicas < 100) throw std::invalid_argument("empirical_cf needs at least 100 replicas");
  const std::array<WeightFn, 1> weights{exp.f};
  const XiReplicas rep = simulate_xi(exp, loop, weights, seed);
  return cf_from_samples(rep.xi[0], exp.alpha);
}

CampbellCells campbell_cells(const WindingField& field, const WeightFn& f, const WeightFn& g, BoundaryPolicy policy) {
  CampbellCells cells;
  cells.cell_area = field.grid.cell_area();
  const bool exclude = policy == BoundaryPolicy::exclude;
  for (int iy = 0; iy < field.grid.ny; ++iy)
    for (int ix = 0; ix < field.grid.nx; ++ix) {
      const std::size_t idx = field.index(ix, iy);
      const int k = field.winding[idx];
      if (k == 0 || (exclude && field.boundary[idx])) continue;
      const Vec2 z = field.sample_point(ix, iy);
      cells.k.push_back(k);
      cells.f.push_back(f(z));
      cells.g.push_back(g(z));
    }
  return cells;
}

CampbellResult campbell_cf(const CampbellCells& cells, double beta, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  const std::size_t n = cells.k.size();
  constexpr std::size_t block = 4096;
  const std::size_t n_blocks = (n + block - 1) / block;
  std::vector<double> re(n_blocks, 0.0), im(n_blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::size_t b = 0; b < n_blocks; ++b) {
    double sr = 0.0, si = 0.0;
    for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
      const double theta = cells.k[i] * beta * cells.f[i];
      const double h = std::sin(0.5 * theta);
      // exp(i theta) - 1 = -2 sin^2(theta / 2) + i sin(theta)
      sr += -2.0 * h * h * cells.g[i];
      si += std::sin(theta) * cells.g[i];
    }
    re[b] = sr;
    im[b] = si;
  }
  const double sr = pairwise_sum(re);
  const double si = pairwise_sum(im);
  CampbellResult r;
  r.beta = beta;
  r.lambda = lambda;
  r.G = {sr * cells.cell_area, si * cells.cell_area};
  r.cf = std::exp(lambda * r.G);
  return r;
}

CampbellResult campbell_cf(const WindingField& field, const WeightFn& f, const WeightFn& g, double beta,
                           double lambda) {
  return campbell_cf(campbell_cells(field, f, g), beta, lambda);
}

double occupation_integral(const Path& path, const WeightFn& h) {
  double acc = 0.0;
  double prev = h(path.points[0]);
  for (std::size_t i = 1; i < path.points.size(); ++i) {
    const double cur = h(path.points[i]);
    acc += 0.5 * (prev + cur) * (path.times[i] - path.times[i - 1]);
    prev = cur;
  }
  return acc;
}

LimitCf limit_cf(const Path& path, const LevelMeasures& fg_measures, const WeightFn& f, const WeightFn& g,
                 double alpha) {
  const RegularizedIntegral reg = regularized_winding_integral(fg_measures);
  LimitCf out;
  out.regularized = reg.value;
  out.convergence_warning = reg.diagnostics.convergence_warning;
  WeightFn abs_fg;
  abs_fg.id = "|f|g";
  abs_fg.value = [&](Vec2 z) { return std::abs(f(z)) * g(z); };
  out.occupation = occupation_integral(path, abs_fg);
  out.value = std::exp(std::complex<double>(-0.5 * std::abs(alpha) * out.occupation, alpha * out.regularized));
  return out;
}

std::vector<double> xi_limit_samples(const Path& path, double regularized, const WeightFn& f, const WeightFn& g,
                                     std::size_t n, std::uint64_t seed) {
  std::vector<double> h(path.points.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = f(path.points[i]) * g(path.points[i]);
  std::vector<double> out(n);
#pragma omp parallel for schedule(static)
  for (std::size_t j = 0; j < n; ++j) {
    const CauchyProcessPath gamma = sample_cauchy_process(path.times, seed, j);
    out[j] = regularized + 0.5 * young_integral(h, gamma);
  }
  return out;
}

double xi_limit_sample(const Path& path, const LevelMeasures& fg_measures, const WeightFn& f, const WeightFn& g,
                       std::uint64_t seed, std::uint64_t stream) {
  const double reg = regularized_winding_integral(fg_measures).value;
  std::vector<double> h(path.points.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = f(path.points[i]) * g(path.points[i]);
  return reg + 0.5 * young_integral(h, sample_cauchy_process(path.times, seed, stream));
}

}  // namespace stogreen
