#pragma once

#include <string>
#include <vector>

namespace mbl {

struct PlotOptions {
  std::string x_column = "t";
  bool log_x = false;
  bool log_y = false;
  std::string title;
};

// Renders the named columns of a trace/summary CSV as polyline series into a
// standalone SVG. Byte-deterministic for identical inputs; errors before any
// file is written (missing column is named, empty tables are rejected).
void render_plot(const std::string& csv_path, const std::vector<std::string>& columns,
                 const std::string& out_svg, const PlotOptions& options = {});

}  // namespace mbl
