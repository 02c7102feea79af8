#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "windcal/common.hpp"
#include "windcal/distributions.hpp"

namespace windcal {

enum class HistogramKind { Pit, VerificationRank };

std::string_view to_string(HistogramKind kind);

struct HistogramCounts {
	HistogramKind kind = HistogramKind::Pit;
	std::vector<std::uint64_t> bins;
	std::uint64_t total = 0;

	friend bool operator==(const HistogramCounts &, const HistogramCounts &) = default;
};

/// Which CRPS estimator produced a report.
enum class ScoringRule { SampleCrps, ClosedFormCrps };

std::string_view to_string(ScoringRule rule);

struct ScoreReport {
	std::string strategy_id;
	std::string model_id;
	int horizon_h = 0;
	ScoringRule rule = ScoringRule::SampleCrps;
	std::vector<Timestamp> times;
	std::vector<double> crps_values;
	double mean_crps = 0.0;
	/// Filled once the benchmark report is known.
	std::optional<double> crpss_vs_raw;
	HistogramCounts histogram;
};

/// Builds a report; mean_crps is the arithmetic mean of crps_values.
ScoreReport make_report(std::string strategy_id, std::string model_id, int horizon_h, ScoringRule rule,
                        std::vector<Timestamp> times, std::vector<double> crps_values, HistogramCounts histogram);

/// Sample CRPS of an M-member ensemble:
/// mean |X_i - y| - 1/(2 M^2) sum_ij |X_i - X_j|. Throws std::invalid_argument for M = 0.
double sample_crps(std::span<const double> members, double y);

/// Skill score 1 - model/benchmark. Throws std::invalid_argument when benchmark <= 0.
double crpss(double crps_model, double crps_benchmark);

/// Rank of y among the members (1..M+1). Ties with members are placed uniformly at random.
int verification_rank(std::span<const double> members, double y, std::uint64_t tie_seed);
int verification_rank(std::span<const double> members, double y, std::mt19937_64 &rng);

double pit_value(const PredictiveDistribution &dist, double y);

/// PIT values must lie in [0, 1] and are binned evenly over n_bins; ranks must lie in 1..n_bins.
/// Throws std::out_of_range for out-of-domain values.
HistogramCounts build_histogram(std::span<const double> values_or_ranks, HistogramKind kind, std::size_t n_bins);

inline HistogramCounts empty_histogram(HistogramKind kind, std::size_t n_bins) {
	return {kind, std::vector<std::uint64_t>(n_bins, 0), 0};
}

/// Adds one observation into an existing histogram.
void accumulate(HistogramCounts &hist, double value_or_rank);

/// Bin-wise sum. Kinds and bin counts must agree.
HistogramCounts merge(const HistogramCounts &lhs, const HistogramCounts &rhs);

/// Pearson chi-square statistic against a uniform histogram.
double chi_square_statistic(const HistogramCounts &hist);
/// Upper (1 - alpha) quantile of the chi-square distribution with `dof` degrees of freedom.
double chi_square_critical(std::size_t dof, double alpha);
/// True when uniformity is NOT rejected at level alpha.
bool chi_square_uniform(const HistogramCounts &hist, double alpha = 0.01);

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and `cdf`.
double ks_distance(std::vector<double> samples, const std::function<double(double)> &cdf);

} // namespace windcal
