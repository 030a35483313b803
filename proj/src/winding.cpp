#include "stogreen/winding.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace stogreen {

namespace {

std::string describe(Vec2 z) {
  std::ostringstream os;
  os << std::setprecision(17) << "point (" << z.x << ", " << z.y << ") lies on the curve";
  return os.str();
}

bool near_segment(Vec2 z, Vec2 a, Vec2 b, double tol) {
  if (z.x < std::min(a.x, b.x) - tol || z.x > std::max(a.x, b.x) + tol) return false;
  if (z.y < std::min(a.y, b.y) - tol || z.y > std::max(a.y, b.y) + tol) return false;
  return segment_distance(z, a, b) <= tol;
}

// Contribution of segment a->b to the winding around z (half-open rule).
inline int crossing(Vec2 z, Vec2 a, Vec2 b) {
  if (a.y <= z.y) {
    if (b.y > z.y && cross(b - a, z - a) > 0.0) return 1;
  } else if (b.y <= z.y && cross(b - a, z - a) < 0.0) {
    return -1;
  }
  return 0;
}

// Sample y per row: the cell centre, nudged up by 1e-9 of a cell when a
// horizontal segment lies exactly on the row.
std::vector<double> row_sample_y(const ClosedPolyline& loop, const Grid& grid, int& jittered) {
  std::vector<double> horizontal;
  const auto& v = loop.vertices;
  for (std::size_t i = 0; i + 1 < v.size(); ++i)
    if (v[i].y == v[i + 1].y) horizontal.push_back(v[i].y);
  std::sort(horizontal.begin(), horizontal.end());

  std::vector<double> ys(static_cast<std::size_t>(grid.ny));
  const double dy = grid.dy();
  jittered = 0;
  for (int iy = 0; iy < grid.ny; ++iy) {
    double y = grid.bbox.ymin + (iy + 0.5) * dy;
    if (std::binary_search(horizontal.begin(), horizontal.end(), y)) {
      y += dy * 1e-9;
      ++jittered;
    }
    ys[static_cast<std::size_t>(iy)] = y;
  }
  return ys;
}

WindingField scanline_field(const ClosedPolyline& loop, const Grid& grid, bool parallel) {
  if (grid.nx < 1 || grid.ny < 1) throw std::invalid_argument("grid must have positive size");
  WindingField field;
  field.grid = grid;
  field.winding.assign(grid.cells(), 0);
  field.boundary.assign(grid.cells(), 0);
  field.row_y = row_sample_y(loop, grid, field.jittered_rows);

  const auto& v = loop.vertices;
  const std::size_t n_seg = loop.n_segments();
  const double dx = grid.dx();
  const double dy = grid.dy();
  const double diag = grid.cell_diagonal();
  const double x0 = grid.bbox.xmin;
  const double y0 = grid.bbox.ymin;
  const int nx = grid.nx;
  const int ny = grid.ny;

  // Rows whose sample y is within one diagonal of each segment's y-range.
  auto row_range = [&](std::size_t s) {
    const double lo = std::min(v[s].y, v[s + 1].y) - diag;
    const double hi = std::max(v[s].y, v[s + 1].y) + diag;
    const double r0 = std::ceil((lo - y0) / dy - 0.5);
    const double r1 = std::floor((hi - y0) / dy - 0.5);
    const int a = static_cast<int>(std::clamp(r0, 0.0, static_cast<double>(ny)));
    const int b = static_cast<int>(std::clamp(r1, -1.0, static_cast<double>(ny - 1)));
    return std::pair<int, int>{a, b};
  };
  std::vector<std::uint32_t> offsets(static_cast<std::size_t>(ny) + 1, 0);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const auto [a, b] = row_range(s);
    for (int r = a; r <= b; ++r) ++offsets[static_cast<std::size_t>(r) + 1];
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(ny); ++r) offsets[r + 1] += offsets[r];
  std::vector<std::uint32_t> segs(offsets.back());
  {
    std::vector<std::uint32_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::size_t s = 0; s < n_seg; ++s) {
      const auto [a, b] = row_range(s);
      for (int r = a; r <= b; ++r) segs[fill[static_cast<std::size_t>(r)]++] = static_cast<std::uint32_t>(s);
    }
  }

#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (int iy = 0; iy < ny; ++iy) {
    const double y = field.row_y[static_cast<std::size_t>(iy)];
    std::int32_t* row = field.winding.data() + static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx);
    std::uint8_t* mask = field.boundary.data() + static_cast<std::size_t>(iy) * static_cast<std::size_t>(nx);
    std::vector<std::int32_t> diff(static_cast<std::size_t>(nx) + 1, 0);

    for (std::uint32_t e = offsets[static_cast<std::size_t>(iy)]; e < offsets[static_cast<std::size_t>(iy) + 1]; ++e) {
      const Vec2 a = v[segs[e]];
      const Vec2 b = v[segs[e] + 1];

      int sign = 0;
      if (a.y <= y && b.y > y) sign = 1;
      else if (b.y <= y && a.y > y) sign = -1;
      if (sign != 0) {
        const double xi = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
        const double k = std::clamp(std::ceil((xi - x0) / dx - 0.5), 0.0, static_cast<double>(nx));
        if (k >= 1.0) diff[static_cast<std::size_t>(k) - 1] += sign;
      }

      // Clip the segment to the band |y' - y| <= diag, then test nearby centres.
      double tlo = 0.0;
      double thi = 1.0;
      if (b.y != a.y) {
        const double t1 = (y - diag - a.y) / (b.y - a.y);
        const double t2 = (y + diag - a.y) / (b.y - a.y);
        tlo = std::max(0.0, std::min(t1, t2));
        thi = std::min(1.0, std::max(t1, t2));
        if (tlo > thi) continue;
      } else if (std::abs(a.y - y) > diag) {
        continue;
      }
      const double xa = a.x + tlo * (b.x - a.x);
      const double xb = a.x + thi * (b.x - a.x);
      const double c0 = std::ceil((std::min(xa, xb) - diag - x0) / dx - 0.5);
      const double c1 = std::floor((std::max(xa, xb) + diag - x0) / dx - 0.5);
      const int lo = static_cast<int>(std::clamp(c0, 0.0, static_cast<double>(nx)));
      const int hi = static_cast<int>(std::clamp(c1, -1.0, static_cast<double>(nx - 1)));
      for (int ix = lo; ix <= hi; ++ix) {
        if (mask[ix]) continue;
        const Vec2 p{x0 + (ix + 0.5) * dx, y};
        if (segment_distance(p, a, b) <= diag) mask[ix] = 1;
      }
    }

    std::int32_t acc = 0;
    for (int ix = nx - 1; ix >= 0; --ix) {
      acc += diff[static_cast<std::size_t>(ix)];
      row[ix] = acc;
    }
  }
  return field;
}

}  // namespace

OnCurveError::OnCurveError(Vec2 z) : std::runtime_error(describe(z)), point(z) {}

int winding_number(const ClosedPolyline& loop, Vec2 z) {
  const auto& v = loop.vertices;
  int w = 0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (near_segment(z, v[i], v[i + 1], kOnCurveTolerance)) throw OnCurveError(z);
    w += crossing(z, v[i], v[i + 1]);
  }
  return w;
}

Grid Grid::covering(const Box& box, int nx, int ny, int padding) {
  if (nx < 16 || ny < 16) throw std::invalid_argument("grid needs nx, ny >= 16");
  if (padding < 0 || 2 * padding >= std::min(nx, ny))
    throw std::invalid_argument("grid padding too large for the resolution");
  double w = box.width();
  double h = box.height();
  const double fallback = std::max({w, h, 1.0});
  if (!(w > 0.0)) w = fallback;
  if (!(h > 0.0)) h = fallback;
  const double cx = 0.5 * (box.xmin + box.xmax);
  const double cy = 0.5 * (box.ymin + box.ymax);
  // One extra cell beyond `padding` so the frame is strictly outside the box.
  const double dx = w / (nx - 2 * padding - 2);
  const double dy = h / (ny - 2 * padding - 2);
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.bbox = {cx - 0.5 * nx * dx, cx + 0.5 * nx * dx, cy - 0.5 * ny * dy, cy + 0.5 * ny * dy};
  return g;
}

Grid Grid::covering(const ClosedPolyline& loop, int nx, int ny, int padding) {
  return covering(loop.bounding_box(), nx, ny, padding);
}

std::int32_t WindingField::min_winding() const {
  return winding.empty() ? 0 : *std::min_element(winding.begin(), winding.end());
}

std::int32_t WindingField::max_winding() const {
  return winding.empty() ? 0 : *std::max_element(winding.begin(), winding.end());
}

double WindingField::boundary_area() const {
  return static_cast<double>(std::count(boundary.begin(), boundary.end(), std::uint8_t{1})) * grid.cell_area();
}

WindingField winding_field(const ClosedPolyline& loop, const Grid& grid) {
  return scanline_field(loop, grid, true);
}

WindingField winding_field_serial(const ClosedPolyline& loop, const Grid& grid) {
  return scanline_field(loop, grid, false);
}

WindingField winding_field_bruteforce(const ClosedPolyline& loop, const Grid& grid) {
  WindingField field;
  field.grid = grid;
  field.winding.assign(grid.cells(), 0);
  field.boundary.assign(grid.cells(), 0);
  field.row_y = row_sample_y(loop, grid, field.jittered_rows);
  const double diag = grid.cell_diagonal();
  const auto& v = loop.vertices;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const Vec2 p = field.sample_point(ix, iy);
      const std::size_t idx = field.index(ix, iy);
      for (std::size_t s = 0; s + 1 < v.size(); ++s)
        if (segment_distance(p, v[s], v[s + 1]) <= diag) {
          field.boundary[idx] = 1;
          break;
        }
      try {
        field.winding[idx] = winding_number(loop, p);
      } catch (const OnCurveError&) {
        field.winding[idx] = 0;
      }
    }
  }
  return field;
}

// ---------------------------------------------------------------------------

WindingLocator::WindingLocator(const ClosedPolyline& loop, int bands) : v_(loop.vertices) {
  box_ = loop.bounding_box();
  const std::size_t n_seg = loop.n_segments();
  if (bands <= 0) bands = static_cast<int>(std::clamp<std::size_t>(2 * n_seg, 1, std::size_t{1} << 15));
  const double height = box_.height() + 4.0 * kOnCurveTolerance;
  band_height_ = height > 0.0 ? height / bands : 1.0;
  const double y0 = box_.ymin - 2.0 * kOnCurveTolerance;
  auto band_of = [&](double y) {
    const double b = std::floor((y - y0) / band_height_);
    return static_cast<std::size_t>(std::clamp(b, 0.0, static_cast<double>(bands - 1)));
  };
  offsets_.assign(static_cast<std::size_t>(bands) + 1, 0);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::size_t a = band_of(std::min(v_[s].y, v_[s + 1].y) - kOnCurveTolerance);
    const std::size_t b = band_of(std::max(v_[s].y, v_[s + 1].y) + kOnCurveTolerance);
    for (std::size_t r = a; r <= b; ++r) ++offsets_[r + 1];
  }
  for (std::size_t r = 0; r < static_cast<std::size_t>(bands); ++r) offsets_[r + 1] += offsets_[r];
  segments_.resize(offsets_.back());
  std::vector<std::uint32_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (std::size_t s = 0; s < n_seg; ++s) {
    const std::size_t a = band_of(std::min(v_[s].y, v_[s + 1].y) - kOnCurveTolerance);
    const std::size_t b = band_of(std::max(v_[s].y, v_[s + 1].y) + kOnCurveTolerance);
    for (std::size_t r = a; r <= b; ++r) segments_[fill[r]++] = static_cast<std::uint32_t>(s);
  }
}

int WindingLocator::operator()(Vec2 z) const {
  const double tol = kOnCurveTolerance;
  if (z.y < box_.ymin - tol || z.y > box_.ymax + tol || z.x > box_.xmax + tol) return 0;
  const double y0 = box_.ymin - 2.0 * tol;
  const std::size_t bands = offsets_.size() - 1;
  const double b = std::floor((z.y - y0) / band_height_);
  const std::size_t band = static_cast<std::size_t>(std::clamp(b, 0.0, static_cast<double>(bands - 1)));
  int w = 0;
  for (std::uint32_t e = offsets_[band]; e < offsets_[band + 1]; ++e) {
    const Vec2 a = v_[segments_[e]];
    const Vec2 c = v_[segments_[e] + 1];
    if (near_segment(z, a, c, tol)) throw OnCurveError(z);
    w += crossing(z, a, c);
  }
  return w;
}

// ---------------------------------------------------------------------------

double LevelMeasures::f_tail(int n) const {
  if (n == 0) throw std::invalid_argument("tail index must be nonzero");
  const std::size_t i = static_cast<std::size_t>(std::abs(n));
  if (i >= tails_pos.size()) throw std::out_of_range("tail index beyond n_max + 1");
  return n > 0 ? tails_pos[i] : tails_neg[i];
}

double LevelMeasures::area_tail(int n) const {
  if (n == 0) throw std::invalid_argument("tail index must be nonzero");
  const std::size_t i = static_cast<std::size_t>(std::abs(n));
  if (i >= areas_pos.size()) throw std::out_of_range("tail index beyond n_max + 1");
  return n > 0 ? areas_pos[i] : areas_neg[i];
}

LevelMeasures level_measures(const WindingField& field, const WeightFn& f, int n_max, BoundaryPolicy policy) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const Grid& g = field.grid;
  const int kmin = std::min(field.min_winding(), 0);
  const int kmax = std::max(field.max_winding(), 0);
  const std::size_t levels = static_cast<std::size_t>(kmax - kmin + 1);
  const bool exclude = policy == BoundaryPolicy::exclude;

  // Per-row partial sums, combined afterwards in row order for reproducibility.
  std::vector<double> row_sums(static_cast<std::size_t>(g.ny) * levels, 0.0);
  std::vector<std::int64_t> row_counts(static_cast<std::size_t>(g.ny) * levels, 0);
#pragma omp parallel for schedule(dynamic, 16)
  for (int iy = 0; iy < g.ny; ++iy) {
    double* sums = row_sums.data() + static_cast<std::size_t>(iy) * levels;
    std::int64_t* counts = row_counts.data() + static_cast<std::size_t>(iy) * levels;
    for (int ix = 0; ix < g.nx; ++ix) {
      const std::size_t idx = field.index(ix, iy);
      const int k = field.winding[idx];
      if (k == 0) continue;
      if (exclude && field.boundary[idx]) continue;
      const std::size_t slot = static_cast<std::size_t>(k - kmin);
      sums[slot] += f(field.sample_point(ix, iy));
      ++counts[slot];
    }
  }

  LevelMeasures m;
  m.weight_id = f.id;
  m.n_max = n_max;
  m.policy = policy;
  m.excluded_area = exclude ? field.boundary_area() : 0.0;
  const double area = g.cell_area();
  for (std::size_t slot = 0; slot < levels; ++slot) {
    const int k = kmin + static_cast<int>(slot);
    if (k == 0) continue;
    double s = 0.0;
    std::int64_t c = 0;
    for (int iy = 0; iy < g.ny; ++iy) {
      s += row_sums[static_cast<std::size_t>(iy) * levels + slot];
      c += row_counts[static_cast<std::size_t>(iy) * levels + slot];
    }
    if (c == 0) continue;
    m.per_level[k] = s * area;
    m.per_level_area[k] = static_cast<double>(c) * area;
  }

  const std::size_t len = static_cast<std::size_t>(n_max) + 2;
  m.tails_pos.assign(len, 0.0);
  m.tails_neg.assign(len, 0.0);
  m.areas_pos.assign(len, 0.0);
  m.areas_neg.assign(len, 0.0);
  // Suffix sums over the attained levels, from the outermost level inwards.
  double fp = 0.0, ap = 0.0;
  auto it = m.per_level.rbegin();
  for (int n = kmax; n >= 1; --n) {
    while (it != m.per_level.rend() && it->first >= n) {
      if (it->first > 0) {
        fp += it->second;
        ap += m.per_level_area.at(it->first);
      }
      ++it;
    }
    if (static_cast<std::size_t>(n) < len) {
      m.tails_pos[static_cast<std::size_t>(n)] = fp;
      m.areas_pos[static_cast<std::size_t>(n)] = ap;
    }
  }
  double fn = 0.0, an = 0.0;
  auto jt = m.per_level.begin();
  for (int n = -kmin; n >= 1; --n) {
    while (jt != m.per_level.end() && jt->first <= -n) {
      if (jt->first < 0) {
        fn += jt->second;
        an += m.per_level_area.at(jt->first);
      }
      ++jt;
    }
    if (static_cast<std::size_t>(n) < len) {
      m.tails_neg[static_cast<std::size_t>(n)] = fn;
      m.areas_neg[static_cast<std::size_t>(n)] = an;
    }
  }
  return m;
}

double truncated_winding_integral(const LevelMeasures& m, int K, TruncationMode mode) {
  if (K < 1) throw std::invalid_argument("truncation level K must be >= 1");
  if (K > m.n_max) throw std::invalid_argument("truncation level K exceeds n_max");
  double clamp = 0.0;
  for (int n = 1; n <= K; ++n) clamp += m.f_tail(n) - m.f_tail(-n);
  if (mode == TruncationMode::clamp) return clamp;
  return clamp - K * (m.f_tail(K + 1) - m.f_tail(-(K + 1)));
}

RegularizedIntegral regularized_winding_integral(const LevelMeasures& m, const TailPolicy& policy) {
  if (!(policy.decay_exponent > 0.0)) throw std::invalid_argument("decay exponent must be positive");
  RegularizedIntegral r;
  auto& d = r.diagnostics;
  double acc = 0.0;
  for (int n = 1; n <= m.n_max; ++n) {
    const double diff = m.f_tail(n) - m.f_tail(-n);
    acc += diff;
    d.differences.push_back(diff);
    d.partial_sums.push_back(acc);
  }
  r.value = acc;

  const double gamma = policy.decay_exponent;
  const int from = std::max(1, (m.n_max + 1) / 2);
  for (int n = from; n <= m.n_max; ++n)
    d.fitted_constant = std::max(d.fitted_constant,
                                 std::abs(d.differences[static_cast<std::size_t>(n - 1)]) * std::pow(n, 1.0 + gamma));
  d.remainder_bound = d.fitted_constant * std::pow(m.n_max, -gamma) / gamma;

  const int quarter = std::max(1, m.n_max / 4);
  double head = 0.0, tail = 0.0;
  for (int n = 1; n <= quarter; ++n) head += std::abs(d.differences[static_cast<std::size_t>(n - 1)]);
  for (int n = m.n_max - quarter + 1; n <= m.n_max; ++n)
    tail += std::abs(d.differences[static_cast<std::size_t>(n - 1)]);
  d.convergence_warning = m.n_max >= 4 && tail > 0.0 && tail >= head;
  return r;
}

double joint_tail_area(const WindingField& a, const WindingField& b, int n, TailSigns signs, BoundaryPolicy policy) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("joint_tail_area needs identical grids");
  if (n < 1) throw std::invalid_argument("tail level must be >= 1");
  const bool exclude = policy == BoundaryPolicy::exclude;
  const bool a_pos = signs == TailSigns::pos_pos || signs == TailSigns::pos_neg;
  const bool b_pos = signs == TailSigns::pos_pos || signs == TailSigns::neg_pos;
  std::int64_t count = 0;
  for (std::size_t i = 0; i < a.winding.size(); ++i) {
    if (exclude && (a.boundary[i] || b.boundary[i])) continue;
    const bool in_a = a_pos ? a.winding[i] >= n : a.winding[i] <= -n;
    const bool in_b = b_pos ? b.winding[i] >= n : b.winding[i] <= -n;
    count += (in_a && in_b) ? 1 : 0;
  }
  return static_cast<double>(count) * a.grid.cell_area();
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits;
  std::memcpy(&bits, &value, sizeof(T));
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
  out.write(buf, sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) throw std::runtime_error("truncated field dump");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  T value;
  std::memcpy(&value, &bits, sizeof(T));
  return value;
}

}  // namespace

void write_field_dump(std::ostream& out, const WindingField& field) {
  out.write("SGWF", 4);
  put_le<std::uint32_t>(out, 1);
  put_le<double>(out, field.grid.bbox.xmin);
  put_le<double>(out, field.grid.bbox.xmax);
  put_le<double>(out, field.grid.bbox.ymin);
  put_le<double>(out, field.grid.bbox.ymax);
  put_le<std::int32_t>(out, field.grid.nx);
  put_le<std::int32_t>(out, field.grid.ny);
  for (std::int32_t w : field.winding) put_le<std::int32_t>(out, w);
}

WindingField read_field_dump(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SGWF", 4) != 0) throw std::runtime_error("not a winding field dump");
  if (get_le<std::uint32_t>(in) != 1) throw std::runtime_error("unsupported field dump version");
  WindingField f;
  f.grid.bbox.xmin = get_le<double>(in);
  f.grid.bbox.xmax = get_le<double>(in);
  f.grid.bbox.ymin = get_le<double>(in);
  f.grid.bbox.ymax = get_le<double>(in);
  f.grid.nx = get_le<std::int32_t>(in);
  f.grid.ny = get_le<std::int32_t>(in);
  if (f.grid.nx <= 0 || f.grid.ny <= 0) throw std::runtime_error("invalid grid size in field dump");
  f.winding.resize(f.grid.cells());
  for (auto& w : f.winding) w = get_le<std::int32_t>(in);
  f.boundary.assign(f.grid.cells(), 0);
  f.row_y.resize(static_cast<std::size_t>(f.grid.ny));
  for (int iy = 0; iy < f.grid.ny; ++iy) f.row_y[static_cast<std::size_t>(iy)] = f.grid.center(0, iy).y;
  return f;
}

void write_level_measures_csv(std::ostream& out, const LevelMeasures& m) {
  out << "k,area,f_measure\n" << std::setprecision(17);
  for (const auto& [k, fm] : m.per_level) out << k << ',' << m.per_level_area.at(k) << ',' << fm << '\n';
}

}  // namespace stogreen
