#pragma once

#include <map>
#include <string>
#include <vector>

#include "svpl/csv.hpp"

namespace svpl::plot {

/// Minimal renderer for the experiment CSVs: grouped line charts and
/// alpha-x-r style heatmaps, written as standalone SVG files. Rows sharing
/// an x (or cell) within a series are averaged, so long-format sweep output
/// with replications plots directly.
struct PlotSpec {
  enum class Kind { Line, Heatmap };

  Kind kind = Kind::Line;
  std::string x_column;
  std::string y_column;                     // line: y value; heatmap: y axis
  std::string value_column;                 // heatmap cell value
  std::vector<std::string> series_columns;  // line grouping keys
  std::map<std::string, std::string> filters;  // column -> required cell value
  std::string title;
  int width = 760;
  int height = 480;
};

void render_svg(const csv::Table& table, const PlotSpec& spec, const std::string& out_path);

}  // namespace svpl::plot
