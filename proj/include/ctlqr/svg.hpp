#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace ctlqr::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Standalone SVG line plot: one polyline per series, axis ticks, legend.
/// Byte-deterministic for identical input. Throws std::invalid_argument on
/// an empty series list, a series with fewer than 2 points, or non-positive
/// data on a log axis.
std::string render_lineplot(const std::vector<Series>& series, const std::string& title,
                            const std::string& x_label, const std::string& y_label,
                            bool log_x = false, bool log_y = false);

/// Renders and writes in one step.
void write_lineplot(const std::vector<Series>& series, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::filesystem::path& path, bool log_x = false, bool log_y = false);

}  // namespace ctlqr::svg
