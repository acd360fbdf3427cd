#include "gzhybrid/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "gzhybrid/errors.hpp"

namespace gzhybrid {

namespace {

constexpr int kWidth = 680;
constexpr int kHeight = 460;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 30;
constexpr int kMarginTop = 46;
constexpr int kMarginBottom = 58;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf"};

struct AxisRange {
  double lo = 0.0, hi = 1.0;
  double map(double v, double px_lo, double px_hi) const {
    const double t = (v - lo) / (hi - lo);
    return px_lo + t * (px_hi - px_lo);
  }
};

AxisRange pad_range(double lo, double hi) {
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.08 * (hi - lo);
  return {lo - pad, hi + pad};
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

void svg_header(std::ofstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">"
      << title << "</text>\n";
}

void axes(std::ofstream& out, const std::string& xlabel, const std::string& ylabel) {
  const int x0 = kMarginLeft, x1 = kWidth - kMarginRight;
  const int y0 = kHeight - kMarginBottom, y1 = kMarginTop;
  out << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\""
      << y0 << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\""
      << y1 << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 14
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << xlabel << "</text>\n"
      << "<text x=\"18\" y=\"" << (y0 + y1) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << (y0 + y1) / 2 << ")\">" << ylabel << "</text>\n";
}

void y_ticks(std::ofstream& out, const AxisRange& yr) {
  const int x0 = kMarginLeft;
  const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;
  for (int i = 0; i <= 5; ++i) {
    const double v = yr.lo + (yr.hi - yr.lo) * i / 5.0;
    const double py = yr.map(v, py0, py1);
    out << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0
        << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << x0 << "\" y1=\"" << py << "\" x2=\""
        << kWidth - kMarginRight << "\" y2=\"" << py
        << "\" stroke=\"#dddddd\"/>\n"
        << "<text x=\"" << x0 - 8 << "\" y=\"" << py + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(v) << "</text>\n";
  }
}

}  // namespace

void write_line_chart_svg(const std::filesystem::path& path, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::vector<PlotSeries>& series, bool log_x) {
  if (series.empty()) throw DataError("plot: no series to draw");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& p : s.points) {
      const double x = log_x ? std::log10(std::max(p.x, 1e-12)) : p.x;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, p.y - p.yerr);
      ymax = std::max(ymax, p.y + p.yerr);
    }
  if (!(xmin <= xmax)) throw DataError("plot: no points to draw");
  const AxisRange xr = pad_range(xmin, xmax);
  const AxisRange yr = pad_range(ymin, ymax);
  const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("plot: cannot open " + path.string());
  svg_header(out, title);
  axes(out, xlabel, ylabel);
  y_ticks(out, yr);

  // x ticks at the data points of the densest series
  const PlotSeries* densest = &series[0];
  for (const auto& s : series)
    if (s.points.size() > densest->points.size()) densest = &s;
  for (const auto& p : densest->points) {
    const double x = log_x ? std::log10(std::max(p.x, 1e-12)) : p.x;
    const double px = xr.map(x, px0, px1);
    out << "<line x1=\"" << px << "\" y1=\"" << py0 << "\" x2=\"" << px << "\" y2=\""
        << py0 + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << py0 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(p.x) << "</text>\n";
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof kPalette / sizeof *kPalette)];
    std::string poly;
    for (const auto& p : series[si].points) {
      const double x = log_x ? std::log10(std::max(p.x, 1e-12)) : p.x;
      const double px = xr.map(x, px0, px1);
      const double py = yr.map(p.y, py0, py1);
      poly += fmt(px) + "," + fmt(py) + " ";
      if (p.yerr > 0.0) {
        const double ylo = yr.map(p.y - p.yerr, py0, py1);
        const double yhi = yr.map(p.y + p.yerr, py0, py1);
        out << "<line x1=\"" << px << "\" y1=\"" << ylo << "\" x2=\"" << px
            << "\" y2=\"" << yhi << "\" stroke=\"" << color << "\"/>\n"
            << "<line x1=\"" << px - 3 << "\" y1=\"" << ylo << "\" x2=\"" << px + 3
            << "\" y2=\"" << ylo << "\" stroke=\"" << color << "\"/>\n"
            << "<line x1=\"" << px - 3 << "\" y1=\"" << yhi << "\" x2=\"" << px + 3
            << "\" y2=\"" << yhi << "\" stroke=\"" << color << "\"/>\n";
      }
      out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    }
    out << "<polyline points=\"" << poly << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"/>\n";
    const double ly = kMarginTop + 16.0 * double(si);
    out << "<rect x=\"" << px0 + 10 << "\" y=\"" << ly << "\" width=\"12\" height=\"4\" fill=\""
        << color << "\"/>\n"
        << "<text x=\"" << px0 + 28 << "\" y=\"" << ly + 6
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << series[si].name
        << "</text>\n";
  }
  out << "</svg>\n";
}

void write_scatter_svg(const std::filesystem::path& path, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel,
                       const std::vector<ScatterPoint>& points) {
  if (points.empty()) throw DataError("plot: no points to draw");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& p : points) {
    xmin = std::min(xmin, p.x);
    xmax = std::max(xmax, p.x);
    ymin = std::min(ymin, p.y);
    ymax = std::max(ymax, p.y);
  }
  const AxisRange xr = pad_range(xmin, xmax);
  const AxisRange yr = pad_range(ymin, ymax);
  const double px0 = kMarginLeft, px1 = kWidth - kMarginRight;
  const double py0 = kHeight - kMarginBottom, py1 = kMarginTop;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("plot: cannot open " + path.string());
  svg_header(out, title);
  axes(out, xlabel, ylabel);
  y_ticks(out, yr);
  for (int i = 0; i <= 5; ++i) {
    const double v = xr.lo + (xr.hi - xr.lo) * i / 5.0;
    const double px = xr.map(v, px0, px1);
    out << "<line x1=\"" << px << "\" y1=\"" << py0 << "\" x2=\"" << px << "\" y2=\""
        << py0 + 4 << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << px << "\" y=\"" << py0 + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(v) << "</text>\n";
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const char* color = kPalette[i % (sizeof kPalette / sizeof *kPalette)];
    const double px = xr.map(points[i].x, px0, px1);
    const double py = yr.map(points[i].y, py0, py1);
    out << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"5\" fill=\"" << color
        << "\"/>\n"
        << "<text x=\"" << px + 8 << "\" y=\"" << py + 4
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << points[i].label
        << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace gzhybrid
