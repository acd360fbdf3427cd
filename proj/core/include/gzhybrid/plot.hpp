#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace gzhybrid {

struct PlotPoint {
  double x = 0.0;
  double y = 0.0;
  double yerr = 0.0;
};

struct PlotSeries {
  std::string name;
  std::vector<PlotPoint> points;
};

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::string label;
};

// Standalone SVG line chart with error bars; one polyline per series.
void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series, bool log_x);

// Standalone SVG scatter with per-point labels.
void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points);

}  // namespace gzhybrid
