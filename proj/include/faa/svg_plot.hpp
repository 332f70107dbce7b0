#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace faa::plot {

struct Series {
    std::string label;
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Static line plot. With log_y, non-positive and non-finite values break the
/// polyline instead of being clamped. Output is a deterministic function of
/// the inputs (fixed palette, fixed number formatting).
std::string line_plot(const std::string& title, const std::string& y_label,
                      const std::vector<Series>& series, bool log_y);

/// Column-usage raster: one column of cells per iteration, one row per
/// history slot (newest slot at the bottom); a cell is filled when that slot
/// was kept by the filter at that iteration.
std::string kept_columns_raster(const std::string& title,
                                const std::vector<std::size_t>& iteration_index,
                                const std::vector<std::vector<bool>>& masks);

}  // namespace faa::plot
