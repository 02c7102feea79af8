#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace windcal::svg {

struct Series {
	std::string label;
	std::vector<std::pair<double, double>> points;
};

/// Standalone SVG document with one polyline per series and a legend.
std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                       const std::vector<Series> &series);

/// Standalone SVG bar chart of histogram counts; the dashed line marks the uniform expectation.
std::string bar_chart(const std::string &title, const std::vector<std::uint64_t> &counts);

} // namespace windcal::svg
