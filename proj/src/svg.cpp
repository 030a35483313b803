#include "stogreen/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace stogreen::svg {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Blue for negative winding, red for positive, white at zero.
std::string color(int k, int kmax) {
  if (k == 0 || kmax == 0) return "#ffffff";
  const double t = std::min(1.0, std::log1p(std::abs(k)) / std::log1p(kmax));
  const int fade = static_cast<int>(std::lround(235.0 * (1.0 - t)));
  char buf[8];
  if (k > 0)
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", 220, fade, fade);
  else
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", fade, fade, 220);
  return buf;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

}  // namespace

std::string heatmap(const WindingField& field, const std::string& title, int max_px) {
  const Grid& g = field.grid;
  const int sx = std::max(1, (g.nx + max_px - 1) / max_px);
  const int sy = std::max(1, (g.ny + max_px - 1) / max_px);
  const int w = (g.nx + sx - 1) / sx;
  const int h = (g.ny + sy - 1) / sy;
  const int kmax = std::max(std::abs(field.min_winding()), std::abs(field.max_winding()));
  const int px = 2;
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << w * px << "\" height=\""
      << h * px + 24 << "\">\n"
      << "<text x=\"4\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">" << escape(title)
      << " (max |k| = " << kmax << ")</text>\n"
      << "<g transform=\"translate(0,24)\" shape-rendering=\"crispEdges\">\n"
      << "<rect width=\"" << w * px << "\" height=\"" << h * px << "\" fill=\"#ffffff\"/>\n";
  // Each block shows the winding of largest magnitude inside it so thin high levels stay visible.
  for (int by = 0; by < h; ++by) {
    int run_start = 0;
    int run_k = 0;
    auto flush = [&](int end) {
      if (run_k != 0)
        out << "<rect x=\"" << run_start * px << "\" y=\"" << (h - 1 - by) * px << "\" width=\""
            << (end - run_start) * px << "\" height=\"" << px << "\" fill=\"" << color(run_k, kmax) << "\"/>\n";
    };
    for (int bx = 0; bx < w; ++bx) {
      int k = 0;
      for (int iy = by * sy; iy < std::min(g.ny, (by + 1) * sy); ++iy)
        for (int ix = bx * sx; ix < std::min(g.nx, (bx + 1) * sx); ++ix) {
          const int v = field.at(ix, iy);
          if (std::abs(v) > std::abs(k)) k = v;
        }
      if (k != run_k) {
        flush(bx);
        run_start = bx;
        run_k = k;
      }
    }
    flush(w);
  }
  out << "</g>\n</svg>\n";
  return out.str();
}

std::string line_plot(const Axes& axes, const std::vector<Series>& series) {
  constexpr double W = 640, H = 420, L = 70, R = 160, T = 36, B = 50;
  auto tx = [&](double x) { return axes.logx ? std::log10(x) : x; };
  auto ty = [&](double y) { return axes.logy ? std::log10(y) : y; };
  auto usable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!axes.logx || x > 0.0) && (!axes.logy || y > 0.0);
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  if (!(x0 <= x1)) x0 = 0.0, x1 = 1.0;
  if (!(y0 <= y1)) y0 = 0.0, y1 = 1.0;
  if (x1 - x0 < 1e-300) x0 -= 0.5, x1 += 0.5;
  if (y1 - y0 < 1e-300) y0 -= 0.5, y1 += 0.5;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (ty(y) - y0) / (y1 - y0) * (H - T - B); };

  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"#ffffff\"/>\n"
      << "<text x=\"" << L << "\" y=\"22\" font-size=\"14\">" << escape(axes.title) << "</text>\n"
      << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = x0 + (x1 - x0) * i / 4.0;
    const double fy = y0 + (y1 - y0) * i / 4.0;
    const double sx = L + (W - L - R) * i / 4.0;
    const double sy = H - B - (H - T - B) * i / 4.0;
    out << "<text x=\"" << num(sx) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">"
        << tick(axes.logx ? std::pow(10.0, fx) : fx) << "</text>\n"
        << "<text x=\"" << L - 6 << "\" y=\"" << num(sy + 4) << "\" text-anchor=\"end\">"
        << tick(axes.logy ? std::pow(10.0, fy) : fy) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
      << escape(axes.xlabel) << "</text>\n"
      << "<text transform=\"translate(16," << (T + H - B) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(axes.ylabel) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* c = kPalette[k % std::size(kPalette)];
    std::string pts;
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      out << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.5\" fill=\"" << c
          << "\"/>\n";
    }
    if (!pts.empty()) out << "<polyline fill=\"none\" stroke=\"" << c << "\" points=\"" << pts << "\"/>\n";
    out << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * (k + 1) << "\" fill=\"" << c << "\">"
        << escape(s.name) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace stogreen::svg
