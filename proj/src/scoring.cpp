#include "windcal/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>

namespace windcal {

std::string_view to_string(HistogramKind kind) {
	return kind == HistogramKind::Pit ? "pit" : "rank";
}

std::string_view to_string(ScoringRule rule) {
	return rule == ScoringRule::SampleCrps ? "sample" : "closed_form";
}

ScoreReport make_report(std::string strategy_id, std::string model_id, int horizon_h, ScoringRule rule,
                        std::vector<Timestamp> times, std::vector<double> crps_values, HistogramCounts histogram) {
	if (times.size() != crps_values.size()) {
		throw std::invalid_argument("make_report: times and crps_values differ in length");
	}
	ScoreReport r;
	r.strategy_id = std::move(strategy_id);
	r.model_id = std::move(model_id);
	r.horizon_h = horizon_h;
	r.rule = rule;
	r.times = std::move(times);
	r.crps_values = std::move(crps_values);
	r.mean_crps = r.crps_values.empty()
	                  ? 0.0
	                  : std::accumulate(r.crps_values.begin(), r.crps_values.end(), 0.0) /
	                        static_cast<double>(r.crps_values.size());
	r.histogram = std::move(histogram);
	return r;
}

double sample_crps(std::span<const double> members, double y) {
	if (members.empty()) {
		throw std::invalid_argument("sample_crps: ensemble has no members");
	}
	const auto m = members.size();
	std::vector<double> sorted(members.begin(), members.end());
	std::sort(sorted.begin(), sorted.end());

	double abs_err = 0.0;
	double spread = 0.0; // sum over i<j of |x_i - x_j|
	for (std::size_t k = 0; k < m; ++k) {
		abs_err += std::abs(sorted[k] - y);
		spread += sorted[k] * (2.0 * static_cast<double>(k) - static_cast<double>(m) + 1.0);
	}
	const double md = static_cast<double>(m);
	// The double sum over all (i, j) counts every unordered pair twice.
	return abs_err / md - (2.0 * spread) / (2.0 * md * md);
}

double crpss(double crps_model, double crps_benchmark) {
	if (!(crps_benchmark > 0.0)) {
		throw std::invalid_argument("crpss: benchmark CRPS must be > 0");
	}
	return 1.0 - crps_model / crps_benchmark;
}

int verification_rank(std::span<const double> members, double y, std::mt19937_64 &rng) {
	if (members.empty()) {
		throw std::invalid_argument("verification_rank: ensemble has no members");
	}
	int below = 0;
	int ties = 0;
	for (const double x : members) {
		if (x < y) {
			++below;
		} else if (x == y) {
			++ties;
		}
	}
	if (ties == 0) {
		return below + 1;
	}
	std::uniform_int_distribution<int> pick(0, ties);
	return below + 1 + pick(rng);
}

int verification_rank(std::span<const double> members, double y, std::uint64_t tie_seed) {
	std::mt19937_64 rng(tie_seed);
	return verification_rank(members, y, rng);
}

double pit_value(const PredictiveDistribution &dist, double y) {
	return cdf(dist, y);
}

void accumulate(HistogramCounts &hist, double v) {
	const auto n_bins = hist.bins.size();
	std::size_t bin = 0;
	if (hist.kind == HistogramKind::Pit) {
		if (!(v >= 0.0 && v <= 1.0)) {
			throw std::out_of_range("PIT value outside [0, 1]: " + std::to_string(v));
		}
		bin = std::min(static_cast<std::size_t>(v * static_cast<double>(n_bins)), n_bins - 1);
	} else {
		if (!(v >= 1.0 && v <= static_cast<double>(n_bins)) || v != std::floor(v)) {
			throw std::out_of_range("rank outside 1.." + std::to_string(n_bins) + ": " + std::to_string(v));
		}
		bin = static_cast<std::size_t>(v) - 1;
	}
	++hist.bins[bin];
	++hist.total;
}

HistogramCounts build_histogram(std::span<const double> values, HistogramKind kind, std::size_t n_bins) {
	if (n_bins == 0) {
		throw std::invalid_argument("build_histogram: n_bins must be >= 1");
	}
	auto hist = empty_histogram(kind, n_bins);
	for (const double v : values) {
		accumulate(hist, v);
	}
	return hist;
}

HistogramCounts merge(const HistogramCounts &lhs, const HistogramCounts &rhs) {
	if (lhs.kind != rhs.kind || lhs.bins.size() != rhs.bins.size()) {
		throw std::invalid_argument("merge: histogram shapes differ");
	}
	HistogramCounts out = lhs;
	for (std::size_t i = 0; i < out.bins.size(); ++i) {
		out.bins[i] += rhs.bins[i];
	}
	out.total += rhs.total;
	return out;
}

double chi_square_statistic(const HistogramCounts &hist) {
	if (hist.total == 0 || hist.bins.empty()) {
		return 0.0;
	}
	const double expected = static_cast<double>(hist.total) / static_cast<double>(hist.bins.size());
	double stat = 0.0;
	for (const auto c : hist.bins) {
		const double diff = static_cast<double>(c) - expected;
		stat += diff * diff / expected;
	}
	return stat;
}

double chi_square_critical(std::size_t dof, double alpha) {
	boost::math::chi_squared dist(static_cast<double>(dof));
	return boost::math::quantile(boost::math::complement(dist, alpha));
}

bool chi_square_uniform(const HistogramCounts &hist, double alpha) {
	if (hist.bins.size() < 2) {
		return true;
	}
	return chi_square_statistic(hist) <= chi_square_critical(hist.bins.size() - 1, alpha);
}

double ks_distance(std::vector<double> samples, const std::function<double(double)> &cdf_fn) {
	if (samples.empty()) {
		throw std::invalid_argument("ks_distance: no samples");
	}
	std::sort(samples.begin(), samples.end());
	const double n = static_cast<double>(samples.size());
	double d = 0.0;
	for (std::size_t i = 0; i < samples.size(); ++i) {
		const double f = cdf_fn(samples[i]);
		d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
	}
	return d;
}

} // namespace windcal
