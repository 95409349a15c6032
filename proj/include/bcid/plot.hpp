#pragma once

#include <string>
#include <vector>

#include "bcid/types.hpp"

namespace bcid {

struct Series {
  std::vector<double> x;
  std::vector<double> y;
};

/// Polylines on a framed canvas; series colours follow a fixed palette.
/// Non-finite or (with log_y) non-positive samples break the line.
void write_line_plot_png(const std::string& path, const std::vector<Series>& series, bool log_y, int width = 640,
                         int height = 400);

/// Row 0 of `values` is drawn at the bottom. NaN cells are left white.
void write_heatmap_png(const std::string& path, const Matrix& values, int cell_pixels = 6);

}  // namespace bcid
