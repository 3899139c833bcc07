#pragma once

// Static SVG figures and tables from suite results.

#include <string>
#include <vector>

#include "mblab/experiments/suite.hpp"

namespace mblab::experiments {

// One plotted point: a seed's value of a metric at some N.
struct PlotPoint {
  std::string mode;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string metric;
  double value = 0.0;
  bool truncated = false;
};

std::vector<PlotPoint> plot_points(const std::vector<SuiteRow>& rows);

// <metric>_vs_n.svg per metric (median line per mode with the seed range
// shaded), overlay_<shape>.svg per shape when trajectories are given
// (largest N, lowest seed per mode; truncated runs dashed and marked),
// plot_data.csv and summary.md. Returns the written file names.
// Throws std::invalid_argument on empty rows.
std::vector<std::string> render_report(const std::vector<SuiteRow>& rows,
                                       const std::vector<CellTrajectory>& trajectories, const std::string& out_dir);

void write_plot_data_csv(std::ostream& out, const std::vector<PlotPoint>& points);
std::vector<PlotPoint> read_plot_data_csv(const std::string& path);

}  // namespace mblab::experiments
