#pragma once

#include <string>
#include <vector>

#include "stogreen/winding.hpp"

namespace stogreen::svg {

/// Winding field as a diverging heat map, downsampled to at most `max_px` pixels per side.
std::string heatmap(const WindingField& field, const std::string& title, int max_px = 256);

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct Axes {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx{false};
  bool logy{false};
};

/// Polyline chart with markers; non-finite points (and nonpositive ones on log axes) are skipped.
std::string line_plot(const Axes& axes, const std::vector<Series>& series);

}  // namespace stogreen::svg
