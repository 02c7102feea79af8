#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "windcal/common.hpp"
#include "windcal/distributions.hpp"
#include "windcal/optimizer.hpp"

namespace windcal {

/**
 * Ensemble forecasts of one variable at one forecast horizon.
 *
 * Row t holds the M exchangeable members valid at times[t]; observations[t] is the verifying value
 * (empty when missing). Times are strictly increasing.
 */
class EnsembleSeries {
public:
	EnsembleSeries() = default;
	/// Validates the invariants and throws std::invalid_argument on violation.
	EnsembleSeries(std::string variable, int horizon_h, std::vector<Timestamp> times, Matrix members,
	               std::vector<std::optional<double>> observations = {});

	const std::string &variable() const noexcept { return variable_; }
	int horizon_h() const noexcept { return horizon_h_; }
	const std::vector<Timestamp> &times() const noexcept { return times_; }
	const Matrix &members() const noexcept { return members_; }
	const std::vector<std::optional<double>> &observations() const noexcept { return observations_; }

	std::size_t size() const noexcept { return times_.size(); }
	std::size_t member_count() const noexcept { return members_.cols(); }
	std::span<const double> row(std::size_t t) const { return members_.row(t); }

	/// Index of `t` in times(), if present.
	std::optional<std::size_t> find(Timestamp t) const;

	/// Calendar day on which the forecast for row t was issued.
	std::int64_t origin_day(std::size_t t) const { return day_index(times_[t] - horizon_h_ * kSecondsPerHour); }

	friend bool operator==(const EnsembleSeries &, const EnsembleSeries &) = default;

private:
	std::string variable_;
	int horizon_h_ = 0;
	std::vector<Timestamp> times_;
	Matrix members_;
	std::vector<std::optional<double>> observations_;
};

struct EnsembleMoments {
	double mean;
	double variance; // population variance, divisor M
};

/// Throws std::invalid_argument when fewer than two members are given.
EnsembleMoments ensemble_moments(std::span<const double> row);

struct EmosParameters {
	double a = 0.0;
	double b = 1.0;
	double c = 1.0;
	double d = 0.0;
	DistKind kind = DistKind::Normal;
	Timestamp fitted_at = 0;
	std::size_t window_days = 0;
	bool converged = true;
};

/// Training pair for the EMOS regression: ensemble moments and the verifying observation.
struct EmosSample {
	double mean;
	double variance;
	double observation;
};

struct EmosFitResult {
	EmosParameters params;
	MinimizeResult optimization;
	double initial_mean_crps = 0.0;
	double final_mean_crps = 0.0;
};

/// Mean closed-form CRPS of the predictive laws induced by (a, b, c, d) over the samples.
double emos_mean_crps(std::span<const EmosSample> samples, DistKind kind, double a, double b, double c, double d);

/**
 * Minimum-CRPS estimation of (a, b, c, d).
 *
 * Optimizes over (a, b, gamma, delta) with c = gamma^2 and d = delta^2, starting from a = 0, b = 1,
 * gamma = standard deviation of the residuals, delta = 1. Throws std::invalid_argument with fewer
 * than two samples. Non-convergence is reported through params.converged.
 */
EmosFitResult fit_detailed(std::span<const EmosSample> samples, DistKind kind);

/// Fits on every row of `training` that carries an observation.
EmosParameters fit(const EnsembleSeries &training, DistKind kind);

/// Fits on the listed rows (which must all carry observations).
EmosParameters fit(const EnsembleSeries &series, std::span<const std::size_t> rows, DistKind kind);

/// Location for the given ensemble mean; gamma locations are floored to stay inside its support.
double emos_location(const EmosParameters &params, double ensemble_mean);

/// Predictive law for one ensemble row. Throws DegenerateScale when c + d S^2 == 0.
PredictiveDistribution calibrate(const EmosParameters &params, std::span<const double> row);

struct CalibratedStep {
	Timestamp time;
	std::size_t row; // index into the source series
	PredictiveDistribution distribution;
	std::size_t params_index; // into RollingResult::parameters
};

struct RollingResult {
	std::vector<CalibratedStep> steps;
	std::vector<EmosParameters> parameters; // one per calibrated forecast day
	std::vector<std::string> warnings;
};

struct RollingOptions {
	std::size_t window_days = 40;
	/// Only forecast days on or after this day are calibrated (days since epoch).
	std::optional<std::int64_t> first_day;
	/// Minimum number of days with data in the window; defaults to ceil(0.75 * window_days).
	std::optional<std::size_t> min_days;
};

/**
 * Rolling EMOS. For each forecast day the parameters are refitted on the observed rows issued in the
 * preceding `window_days` calendar days. A day is only calibrated once a full window of calendar days
 * precedes it; days whose window holds fewer than `min_days` days with data are skipped with a warning.
 */
RollingResult rolling_calibrate(const EnsembleSeries &series, DistKind kind, const RollingOptions &options);

} // namespace windcal
