#pragma once
// Minimal SVG line charts for tails and profiles.

#include <string>
#include <vector>

namespace tailslab {

struct PlotSeries {
  std::string label;
  std::vector<double> x, y;
  bool dashed = false;
};

struct Chart {
  std::string title, xlabel, ylabel;
  bool logx = false, logy = false;
  std::vector<PlotSeries> series;
  int width = 640, height = 420;
};

// Points that cannot be drawn (non-finite, or <= 0 on a log axis) are skipped.
std::string render_svg(const Chart& chart);

}  // namespace tailslab
