#include "windcal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace windcal::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 400.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

const char *const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string escape(const std::string &text) {
	std::string out;
	for (const char c : text) {
		switch (c) {
		case '<':
			out += "&lt;";
			break;
		case '>':
			out += "&gt;";
			break;
		case '&':
			out += "&amp;";
			break;
		default:
			out += c;
		}
	}
	return out;
}

std::string header(const std::string &title) {
	return fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
	                   "font-family=\"sans-serif\" font-size=\"12\">\n"
	                   "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
	                   "<text x=\"{2}\" y=\"24\" font-size=\"15\">{3}</text>\n",
	                   kWidth, kHeight, kLeft, escape(title));
}

} // namespace

std::string line_chart(const std::string &title, const std::string &x_label, const std::string &y_label,
                       const std::vector<Series> &series) {
	double x0 = INFINITY, x1 = -INFINITY, y0 = 0.0, y1 = 0.0;
	for (const auto &s : series) {
		for (const auto &[x, y] : s.points) {
			x0 = std::min(x0, x);
			x1 = std::max(x1, x);
			y0 = std::min(y0, y);
			y1 = std::max(y1, y);
		}
	}
	if (!(x1 > x0)) {
		x0 = std::isfinite(x0) ? x0 - 1.0 : 0.0;
		x1 = x0 + 2.0;
	}
	const double pad = 0.08 * std::max(y1 - y0, 1.0);
	y0 -= pad;
	y1 += pad;
	const double pw = kWidth - kLeft - kRight;
	const double ph = kHeight - kTop - kBottom;
	auto sx = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
	auto sy = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

	std::string out = header(title);
	out += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>\n", kLeft, kTop,
	                   pw, ph);
	out += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n",
	                   kLeft, kLeft + pw, sy(0.0));
	for (int i = 0; i <= 4; ++i) {
		const double y = y0 + (y1 - y0) * i / 4.0;
		out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.1f}</text>\n", kLeft - 6, sy(y) + 4, y);
		const double x = x0 + (x1 - x0) * i / 4.0;
		out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{:g}</text>\n", sx(x),
		                   kTop + ph + 18, x);
	}
	out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
	                   kHeight - 10, escape(x_label));
	out += fmt::format("<text transform=\"translate(16 {:.1f}) rotate(-90)\" text-anchor=\"middle\">{}</text>\n",
	                   kTop + ph / 2, escape(y_label));
	for (std::size_t i = 0; i < series.size(); ++i) {
		const char *color = kPalette[i % std::size(kPalette)];
		std::string pts;
		for (const auto &[x, y] : series[i].points) {
			pts += fmt::format("{:.1f},{:.1f} ", sx(x), sy(y));
		}
		out += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", pts, color);
		const double ly = kTop + 16.0 + 18.0 * static_cast<double>(i);
		out += fmt::format("<line x1=\"{0:.1f}\" x2=\"{1:.1f}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"{3}\" "
		                   "stroke-width=\"2\"/><text x=\"{4:.1f}\" y=\"{5:.1f}\">{6}</text>\n",
		                   kLeft + pw + 12, kLeft + pw + 32, ly, color, kLeft + pw + 38, ly + 4,
		                   escape(series[i].label));
	}
	out += "</svg>\n";
	return out;
}

std::string bar_chart(const std::string &title, const std::vector<std::uint64_t> &counts) {
	const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}));
	const double top = std::max<double>(1.0, static_cast<double>(*std::max_element(counts.begin(), counts.end())));
	const double pw = kWidth - kLeft - 40.0;
	const double ph = kHeight - kTop - kBottom;
	const double bw = pw / static_cast<double>(std::max<std::size_t>(counts.size(), 1));

	std::string out = header(title);
	for (std::size_t i = 0; i < counts.size(); ++i) {
		const double h = static_cast<double>(counts[i]) / top * ph;
		out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"#4c72b0\"/>\n",
		                   kLeft + bw * static_cast<double>(i) + 0.5, kTop + ph - h, std::max(bw - 1.0, 0.5), h);
	}
	if (!counts.empty()) {
		const double expected = total / static_cast<double>(counts.size()) / top * ph;
		out += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2:.1f}\" y2=\"{2:.1f}\" stroke=\"#d62728\" "
		                   "stroke-dasharray=\"5 3\"/>\n",
		                   kLeft, kLeft + pw, kTop + ph - expected);
	}
	out += fmt::format("<line x1=\"{0}\" x2=\"{1}\" y1=\"{2}\" y2=\"{2}\" stroke=\"#444\"/>\n", kLeft, kLeft + pw,
	                   kTop + ph);
	out += fmt::format("<text x=\"{}\" y=\"{:.1f}\">bins: {}, n = {}</text>\n", kLeft, kHeight - 16, counts.size(),
	                   total);
	out += "</svg>\n";
	return out;
}

} // namespace windcal::svg
