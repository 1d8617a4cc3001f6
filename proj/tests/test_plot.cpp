#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "svpl/plot.hpp"

using namespace svpl;

namespace {

csv::Table sweep_like_table() {
  csv::Table t;
  t.columns = {"method", "alpha", "r", "rep", "mean_card", "coverage_hit"};
  auto add = [&](const char* method, double alpha, double r, int rep, double card,
                 double cov) {
    t.rows.push_back({method, csv::format_value(alpha), csv::format_value(r),
                      std::to_string(rep), csv::format_value(card),
                      csv::format_value(cov)});
  };
  for (int rep = 0; rep < 2; ++rep) {
    for (double alpha : {0.1, 0.3, 0.5}) {
      add("ocp", alpha, 0.0, rep, 5.0 - 4.0 * alpha + 0.1 * rep, 1.0 - alpha);
      for (double r : {0.0, 0.5}) {
        add("conformal", alpha, r, rep, 4.0 - 3.0 * alpha + r, 1.0 - alpha + 0.05 * r);
      }
    }
  }
  return t;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(static_cast<bool>(in));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("line plot renders one polyline per series with replications averaged") {
  csv::Table t = sweep_like_table();
  plot::PlotSpec spec;
  spec.kind = plot::PlotSpec::Kind::Line;
  spec.x_column = "alpha";
  spec.y_column = "mean_card";
  spec.series_columns = {"method", "r"};
  spec.title = "cardinality by alpha";

  const std::string out = "plot_line_test.svg";
  plot::render_svg(t, spec, out);
  std::string svg = slurp(out);
  CHECK(svg.find("<svg") == 0);
  CHECK(count_occurrences(svg, "<polyline") == 3);  // ocp + two conformal r levels
  CHECK(svg.find("method=conformal, r=0.5") != std::string::npos);
  CHECK(svg.find("cardinality by alpha") != std::string::npos);
  std::remove(out.c_str());
}

TEST_CASE("line plot filters rows") {
  csv::Table t = sweep_like_table();
  plot::PlotSpec spec;
  spec.x_column = "alpha";
  spec.y_column = "coverage_hit";
  spec.filters = {{"method", "ocp"}};

  const std::string out = "plot_filter_test.svg";
  plot::render_svg(t, spec, out);
  std::string svg = slurp(out);
  CHECK(count_occurrences(svg, "<polyline") == 1);
  std::remove(out.c_str());

  plot::PlotSpec bad = spec;
  bad.filters = {{"method", "nonexistent"}};
  CHECK_THROWS_AS(plot::render_svg(t, bad, out), Error);
}

TEST_CASE("heatmap renders one cell per (x, y) pair") {
  csv::Table t = sweep_like_table();
  plot::PlotSpec spec;
  spec.kind = plot::PlotSpec::Kind::Heatmap;
  spec.x_column = "alpha";
  spec.y_column = "r";
  spec.value_column = "coverage_hit";
  spec.filters = {{"method", "conformal"}};

  const std::string out = "plot_heat_test.svg";
  plot::render_svg(t, spec, out);
  std::string svg = slurp(out);
  CHECK(count_occurrences(svg, "<rect") == 3 * 2 + 1);  // grid cells + background
  std::remove(out.c_str());
}

TEST_CASE("plot rejects unknown columns") {
  csv::Table t = sweep_like_table();
  plot::PlotSpec spec;
  spec.x_column = "alpha";
  spec.y_column = "no_such_column";
  try {
    plot::render_svg(t, spec, "never_written.svg");
    FAIL("expected Config error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}
