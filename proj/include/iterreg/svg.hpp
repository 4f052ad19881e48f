#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace iterreg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers_only = false;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_y = false;
};

/// Minimal standalone SVG line chart. Non-finite (and, on a log axis,
/// non-positive) points are skipped.
std::string render_line_plot(const PlotSpec& spec, const std::vector<Series>& series);
void write_line_plot(const std::filesystem::path& path, const PlotSpec& spec, const std::vector<Series>& series);

}  // namespace iterreg
