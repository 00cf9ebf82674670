#pragma once

// Static SVG line charts for overlaying series on a shared time axis.

#include "tssr/timeseries.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace tssr::cli {

struct PlotSeries {
  std::string label;
  TimeSeries series;
  std::string color = "#1f77b4";
  bool markers = false;  // draw points instead of a line
  bool dashed = false;
};

struct OverlayPlot {
  std::string title;
  std::string x_label = "time [h]";
  std::string y_label = "value";
  std::vector<PlotSeries> series;
  int width = 960;
  int height = 420;
};

[[nodiscard]] std::string render_svg(const OverlayPlot& plot);
void write_svg(const std::filesystem::path& path, const OverlayPlot& plot);

}  // namespace tssr::cli
