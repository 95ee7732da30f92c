#include "mbl/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "mbl/csv.hpp"

namespace mbl {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 30;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void render_plot(const std::string& csv_path, const std::vector<std::string>& columns,
                 const std::string& out_svg, const PlotOptions& options) {
  const CsvTable table = read_csv(csv_path);
  if (table.rows.empty()) throw std::runtime_error("render_plot: '" + csv_path + "' has no data rows");
  if (columns.empty()) throw std::runtime_error("render_plot: no columns requested");

  const std::size_t xcol = table.column_index(options.x_column);
  std::vector<std::size_t> ycols;
  for (const std::string& name : columns) ycols.push_back(table.column_index(name));

  auto xform = [&](double v, bool log_axis) {
    if (!log_axis) return v;
    if (!(v > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return std::log10(v);
  };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& row : table.rows) {
    const double xv = xform(row[xcol], options.log_x);
    if (!std::isfinite(xv)) continue;
    xmin = std::min(xmin, xv);
    xmax = std::max(xmax, xv);
    for (std::size_t c : ycols) {
      const double yv = xform(row[c], options.log_y);
      if (!std::isfinite(yv)) continue;
      ymin = std::min(ymin, yv);
      ymax = std::max(ymax, yv);
    }
  }
  if (!std::isfinite(xmin) || !std::isfinite(ymin))
    throw std::runtime_error("render_plot: no finite points to draw");
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return kMarginTop + (1.0 - (y - ymin) / (ymax - ymin)) * plot_h; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n";
  if (!options.title.empty())
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"18\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << options.title << "</text>\n";

  // frame + ticks
  svg << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << fmt(plot_w)
      << "\" height=\"" << fmt(plot_h) << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = xmin + (xmax - xmin) * k / 4.0;
    const double fy = ymin + (ymax - ymin) * k / 4.0;
    svg << "<text x=\"" << fmt(px(fx)) << "\" y=\"" << (kHeight - kMarginBottom + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << (options.log_x ? "1e" + fmt(fx) : fmt(fx)) << "</text>\n";
    svg << "<text x=\"" << (kMarginLeft - 6) << "\" y=\"" << fmt(py(fy) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << (options.log_y ? "1e" + fmt(fy) : fmt(fy)) << "</text>\n";
  }
  svg << "<text x=\"" << (kMarginLeft + plot_w / 2) << "\" y=\"" << (kHeight - 12)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << options.x_column << "</text>\n";

  for (std::size_t s = 0; s < ycols.size(); ++s) {
    std::ostringstream points;
    bool any = false;
    for (const auto& row : table.rows) {
      const double xv = xform(row[xcol], options.log_x);
      const double yv = xform(row[ycols[s]], options.log_y);
      if (!std::isfinite(xv) || !std::isfinite(yv)) continue;
      points << fmt(px(xv)) << "," << fmt(py(yv)) << " ";
      any = true;
    }
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (any)
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\""
          << points.str() << "\"/>\n";
    svg << "<text x=\"" << (kMarginLeft + 8) << "\" y=\"" << (kMarginTop + 16 + 14 * (int)s)
        << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" << color << "\">"
        << columns[s] << "</text>\n";
  }
  svg << "</svg>\n";

  std::ofstream out(out_svg);
  if (!out) throw std::runtime_error("render_plot: cannot write '" + out_svg + "'");
  out << svg.str();
}

}  // namespace mbl
