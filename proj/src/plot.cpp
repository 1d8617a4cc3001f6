#include "svpl/plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "svpl/errors.hpp"

namespace svpl::plot {
namespace {

struct Margins {
  double left = 64, right = 18, top = 34, bottom = 46;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#17becf", "#7f7f7f", "#bcbd22"};

double parse_cell(const std::string& cell, const std::string& column) {
  try {
    return std::stod(cell);
  } catch (const std::exception&) {
    raise(ErrorCode::Io, "plot: non-numeric cell '" + cell + "' in column " + column);
  }
}

int required_column(const csv::Table& table, const std::string& name) {
  int c = table.column(name);
  require(c >= 0, ErrorCode::Config, "plot: no column named '" + name + "'");
  return c;
}

bool row_passes(const csv::Table& table, const std::vector<std::string>& row,
                const std::map<std::string, std::string>& filters) {
  for (const auto& [column, value] : filters) {
    int c = required_column(table, column);
    if (row[static_cast<std::size_t>(c)] != value) return false;
  }
  return true;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(4);
  ss << v;
  return ss.str();
}

struct Axis {
  double lo = 0, hi = 1;

  void widen(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  double frac(double v) const { return hi > lo ? (v - lo) / (hi - lo) : 0.5; }
  std::vector<double> ticks() const {
    std::vector<double> out;
    for (int i = 0; i <= 4; ++i) out.push_back(lo + (hi - lo) * i / 4.0);
    return out;
  }
};

Axis fit_axis(const std::vector<double>& values) {
  Axis axis;
  axis.lo = *std::min_element(values.begin(), values.end());
  axis.hi = *std::max_element(values.begin(), values.end());
  if (axis.hi == axis.lo) {
    axis.lo -= 0.5;
    axis.hi += 0.5;
  }
  return axis;
}

// five-stop blue-to-red gradient for heatmap cells
std::string heat_color(double frac) {
  static const double stops[5][3] = {{33, 102, 172},
                                     {146, 197, 222},
                                     {247, 247, 247},
                                     {244, 165, 130},
                                     {178, 24, 43}};
  frac = std::clamp(frac, 0.0, 1.0);
  double pos = frac * 4.0;
  int idx = std::min(3, static_cast<int>(pos));
  double t = pos - idx;
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[idx][0] + t * (stops[idx + 1][0] - stops[idx][0]))),
                static_cast<int>(std::lround(stops[idx][1] + t * (stops[idx + 1][1] - stops[idx][1]))),
                static_cast<int>(std::lround(stops[idx][2] + t * (stops[idx + 1][2] - stops[idx][2]))));
  return buf;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "plot: cannot open " + path);
  out << body;
}

std::string svg_header(const PlotSpec& spec) {
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width
      << "\" height=\"" << spec.height << "\" viewBox=\"0 0 " << spec.width << " "
      << spec.height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<style>text{font-family:sans-serif;font-size:12px;}"
         ".title{font-size:14px;font-weight:bold;}</style>\n";
  if (!spec.title.empty()) {
    svg << "<text class=\"title\" x=\"" << spec.width / 2
        << "\" y=\"20\" text-anchor=\"middle\">" << spec.title << "</text>\n";
  }
  return svg.str();
}

void render_line(const csv::Table& table, const PlotSpec& spec,
                 const std::string& out_path) {
  const int xc = required_column(table, spec.x_column);
  const int yc = required_column(table, spec.y_column);

  // series key -> x -> accumulated (sum, count)
  std::map<std::string, std::map<double, std::pair<double, int>>> series;
  for (const auto& row : table.rows) {
    if (!row_passes(table, row, spec.filters)) continue;
    std::string key;
    for (const auto& sc : spec.series_columns) {
      int c = required_column(table, sc);
      if (!key.empty()) key += ", ";
      key += sc + "=" + row[static_cast<std::size_t>(c)];
    }
    double x = parse_cell(row[static_cast<std::size_t>(xc)], spec.x_column);
    const std::string& y_cell = row[static_cast<std::size_t>(yc)];
    if (y_cell.empty()) continue;  // optional metrics may be blank
    double y = parse_cell(y_cell, spec.y_column);
    auto& acc = series[key][x];
    acc.first += y;
    acc.second += 1;
  }
  require(!series.empty(), ErrorCode::Config, "plot: no rows left after filtering");

  std::vector<double> xs, ys;
  for (const auto& [key, points] : series) {
    for (const auto& [x, acc] : points) {
      xs.push_back(x);
      ys.push_back(acc.first / acc.second);
    }
  }
  Axis x_axis = fit_axis(xs);
  Axis y_axis = fit_axis(ys);

  Margins m;
  const double plot_w = spec.width - m.left - m.right;
  const double plot_h = spec.height - m.top - m.bottom;
  auto px = [&](double x) { return m.left + x_axis.frac(x) * plot_w; };
  auto py = [&](double y) { return m.top + (1.0 - y_axis.frac(y)) * plot_h; };

  std::ostringstream svg;
  svg << svg_header(spec);
  svg << "<rect x=\"" << m.left << "\" y=\"" << m.top << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";

  for (double t : x_axis.ticks()) {
    svg << "<line x1=\"" << px(t) << "\" y1=\"" << m.top + plot_h << "\" x2=\"" << px(t)
        << "\" y2=\"" << m.top + plot_h + 4 << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << px(t) << "\" y=\"" << m.top + plot_h + 18
        << "\" text-anchor=\"middle\">" << fmt(t) << "</text>\n";
  }
  for (double t : y_axis.ticks()) {
    svg << "<line x1=\"" << m.left - 4 << "\" y1=\"" << py(t) << "\" x2=\"" << m.left
        << "\" y2=\"" << py(t) << "\" stroke=\"#333\"/>\n"
        << "<text x=\"" << m.left - 8 << "\" y=\"" << py(t) + 4
        << "\" text-anchor=\"end\">" << fmt(t) << "</text>\n";
  }
  svg << "<text x=\"" << m.left + plot_w / 2 << "\" y=\"" << spec.height - 8
      << "\" text-anchor=\"middle\">" << spec.x_column << "</text>\n";
  svg << "<text x=\"16\" y=\"" << m.top + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << m.top + plot_h / 2
      << ")\">" << spec.y_column << "</text>\n";

  int color = 0;
  double legend_y = m.top + 6;
  for (const auto& [key, points] : series) {
    const char* stroke = kPalette[color % 10];
    std::ostringstream path;
    for (const auto& [x, acc] : points) {
      path << (path.tellp() > 0 ? " " : "") << fmt(px(x)) << "," << fmt(py(acc.first / acc.second));
    }
    svg << "<polyline fill=\"none\" stroke=\"" << stroke
        << "\" stroke-width=\"1.5\" points=\"" << path.str() << "\"/>\n";
    for (const auto& [x, acc] : points) {
      svg << "<circle cx=\"" << fmt(px(x)) << "\" cy=\"" << fmt(py(acc.first / acc.second))
          << "\" r=\"2.4\" fill=\"" << stroke << "\"/>\n";
    }
    if (!key.empty()) {
      svg << "<line x1=\"" << m.left + plot_w - 150 << "\" y1=\"" << legend_y
          << "\" x2=\"" << m.left + plot_w - 132 << "\" y2=\"" << legend_y
          << "\" stroke=\"" << stroke << "\" stroke-width=\"2\"/>\n"
          << "<text x=\"" << m.left + plot_w - 126 << "\" y=\"" << legend_y + 4 << "\">"
          << key << "</text>\n";
      legend_y += 16;
    }
    ++color;
  }
  svg << "</svg>\n";
  write_file(out_path, svg.str());
}

void render_heatmap(const csv::Table& table, const PlotSpec& spec,
                    const std::string& out_path) {
  const int xc = required_column(table, spec.x_column);
  const int yc = required_column(table, spec.y_column);
  const int vc = required_column(table, spec.value_column);

  std::map<std::pair<double, double>, std::pair<double, int>> cells;
  for (const auto& row : table.rows) {
    if (!row_passes(table, row, spec.filters)) continue;
    const std::string& v_cell = row[static_cast<std::size_t>(vc)];
    if (v_cell.empty()) continue;
    double x = parse_cell(row[static_cast<std::size_t>(xc)], spec.x_column);
    double y = parse_cell(row[static_cast<std::size_t>(yc)], spec.y_column);
    double v = parse_cell(v_cell, spec.value_column);
    auto& acc = cells[{x, y}];
    acc.first += v;
    acc.second += 1;
  }
  require(!cells.empty(), ErrorCode::Config, "plot: no rows left after filtering");

  std::vector<double> xs, ys, vs;
  for (const auto& [key, acc] : cells) {
    xs.push_back(key.first);
    ys.push_back(key.second);
    vs.push_back(acc.first / acc.second);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  Axis value_axis = fit_axis(vs);

  Margins m;
  m.right = 66;  // room for the value range labels
  const double plot_w = spec.width - m.left - m.right;
  const double plot_h = spec.height - m.top - m.bottom;
  const double cw = plot_w / static_cast<double>(xs.size());
  const double ch = plot_h / static_cast<double>(ys.size());

  auto x_index = [&](double x) {
    return std::lower_bound(xs.begin(), xs.end(), x) - xs.begin();
  };
  auto y_index = [&](double y) {
    return std::lower_bound(ys.begin(), ys.end(), y) - ys.begin();
  };

  std::ostringstream svg;
  svg << svg_header(spec);
  for (const auto& [key, acc] : cells) {
    double v = acc.first / acc.second;
    double gx = m.left + x_index(key.first) * cw;
    double gy = m.top + plot_h - (y_index(key.second) + 1) * ch;
    svg << "<rect x=\"" << fmt(gx) << "\" y=\"" << fmt(gy) << "\" width=\"" << fmt(cw)
        << "\" height=\"" << fmt(ch) << "\" fill=\"" << heat_color(value_axis.frac(v))
        << "\"><title>" << spec.value_column << "=" << fmt(v) << "</title></rect>\n";
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    svg << "<text x=\"" << fmt(m.left + (i + 0.5) * cw) << "\" y=\""
        << m.top + plot_h + 16 << "\" text-anchor=\"middle\">" << fmt(xs[i])
        << "</text>\n";
  }
  for (std::size_t j = 0; j < ys.size(); ++j) {
    svg << "<text x=\"" << m.left - 8 << "\" y=\""
        << fmt(m.top + plot_h - (j + 0.5) * ch + 4) << "\" text-anchor=\"end\">"
        << fmt(ys[j]) << "</text>\n";
  }
  svg << "<text x=\"" << m.left + plot_w / 2 << "\" y=\"" << spec.height - 8
      << "\" text-anchor=\"middle\">" << spec.x_column << "</text>\n"
      << "<text x=\"16\" y=\"" << m.top + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << m.top + plot_h / 2
      << ")\">" << spec.y_column << "</text>\n"
      << "<text x=\"" << spec.width - m.right + 8 << "\" y=\"" << m.top + 10 << "\">"
      << fmt(value_axis.hi) << "</text>\n"
      << "<text x=\"" << spec.width - m.right + 8 << "\" y=\"" << m.top + plot_h << "\">"
      << fmt(value_axis.lo) << "</text>\n";
  svg << "</svg>\n";
  write_file(out_path, svg.str());
}

}  // namespace

void render_svg(const csv::Table& table, const PlotSpec& spec,
                const std::string& out_path) {
  require(!spec.x_column.empty(), ErrorCode::Config, "plot: x column required");
  if (spec.kind == PlotSpec::Kind::Line) {
    require(!spec.y_column.empty(), ErrorCode::Config, "plot: y column required");
    render_line(table, spec, out_path);
  } else {
    require(!spec.y_column.empty() && !spec.value_column.empty(), ErrorCode::Config,
            "plot: heatmap needs y and value columns");
    render_heatmap(table, spec, out_path);
  }
}

}  // namespace svpl::plot
