#include "windcal/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <fmt/format.h>

namespace windcal {

namespace {

// Gamma means at or below zero fall outside the support; they are floored to this value.
constexpr double kGammaLocationFloor = 1e-6;

} // namespace

EnsembleSeries::EnsembleSeries(std::string variable, int horizon_h, std::vector<Timestamp> times, Matrix members,
                               std::vector<std::optional<double>> observations)
    : variable_(std::move(variable)), horizon_h_(horizon_h), times_(std::move(times)), members_(std::move(members)),
      observations_(std::move(observations)) {
	if (observations_.empty()) {
		observations_.assign(times_.size(), std::nullopt);
	}
	if (members_.rows() != times_.size() || observations_.size() != times_.size()) {
		throw std::invalid_argument("EnsembleSeries '" + variable_ + "': times, members and observations differ in length");
	}
	if (!times_.empty() && members_.cols() < 2) {
		throw std::invalid_argument("EnsembleSeries '" + variable_ + "': at least two members are required");
	}
	for (std::size_t i = 1; i < times_.size(); ++i) {
		if (times_[i] <= times_[i - 1]) {
			throw std::invalid_argument("EnsembleSeries '" + variable_ + "': times not strictly increasing at " +
			                            format_iso8601(times_[i]));
		}
	}
}

std::optional<std::size_t> EnsembleSeries::find(Timestamp t) const {
	const auto it = std::lower_bound(times_.begin(), times_.end(), t);
	if (it == times_.end() || *it != t) {
		return std::nullopt;
	}
	return static_cast<std::size_t>(it - times_.begin());
}

EnsembleMoments ensemble_moments(std::span<const double> row) {
	if (row.size() < 2) {
		throw std::invalid_argument("ensemble_moments: at least two members are required");
	}
	// Summing in sorted order makes the result bit-identical under member permutation.
	std::vector<double> sorted(row.begin(), row.end());
	std::sort(sorted.begin(), sorted.end());
	const double m = static_cast<double>(row.size());
	double sum = 0.0;
	for (const double x : sorted) {
		sum += x;
	}
	const double mean = sum / m;
	double ss = 0.0;
	for (const double x : sorted) {
		ss += (x - mean) * (x - mean);
	}
	return {mean, ss / m};
}

double emos_location(const EmosParameters &params, double ensemble_mean) {
	const double mu = params.a + params.b * ensemble_mean;
	if (params.kind == DistKind::Gamma) {
		return std::max(mu, kGammaLocationFloor);
	}
	return mu;
}

double emos_mean_crps(std::span<const EmosSample> samples, DistKind kind, double a, double b, double c, double d) {
	if (samples.empty()) {
		return std::numeric_limits<double>::quiet_NaN();
	}
	double total = 0.0;
	for (const auto &s : samples) {
		const double var = c + d * s.variance;
		if (!(var > 0.0) || !std::isfinite(var)) {
			return std::numeric_limits<double>::infinity();
		}
		double mu = a + b * s.mean;
		if (kind == DistKind::Gamma) {
			mu = std::max(mu, kGammaLocationFloor);
		}
		if (!std::isfinite(mu)) {
			return std::numeric_limits<double>::infinity();
		}
		total += crps_closed_form(PredictiveDistribution(kind, mu, std::sqrt(var)), s.observation);
	}
	return total / static_cast<double>(samples.size());
}

EmosFitResult fit_detailed(std::span<const EmosSample> samples, DistKind kind) {
	if (samples.size() < 2) {
		throw std::invalid_argument("EMOS fit needs at least two training rows, got " + std::to_string(samples.size()));
	}
	for (const auto &s : samples) {
		if (!std::isfinite(s.mean) || !std::isfinite(s.variance) || !std::isfinite(s.observation)) {
			throw std::invalid_argument("EMOS fit: non-finite training value");
		}
	}
	double resid_mean = 0.0;
	for (const auto &s : samples) {
		resid_mean += s.observation - s.mean;
	}
	resid_mean /= static_cast<double>(samples.size());
	double resid_var = 0.0;
	for (const auto &s : samples) {
		const double r = s.observation - s.mean - resid_mean;
		resid_var += r * r;
	}
	resid_var /= static_cast<double>(samples.size() - 1);
	double gamma0 = std::sqrt(resid_var);
	if (!(gamma0 > 0.0)) {
		gamma0 = 1.0;
	}

	// The score is scale-equivariant (zero stays zero), so the search runs on data divided by the
	// spread of the observations and the parameters are mapped back afterwards.
	double obs_mean = 0.0;
	for (const auto &s : samples) {
		obs_mean += s.observation / static_cast<double>(samples.size());
	}
	double obs_var = 0.0;
	for (const auto &s : samples) {
		obs_var += (s.observation - obs_mean) * (s.observation - obs_mean) / static_cast<double>(samples.size());
	}
	double unit = std::sqrt(obs_var);
	if (!(unit > 0.0) || !std::isfinite(unit)) {
		unit = std::abs(obs_mean) > 0.0 ? std::abs(obs_mean) : 1.0;
	}
	std::vector<EmosSample> scaled(samples.begin(), samples.end());
	for (auto &s : scaled) {
		s.mean /= unit;
		s.variance /= unit * unit;
		s.observation /= unit;
	}

	ObjectiveSpec spec;
	spec.dimension = 4;
	spec.initial_point = {0.0, 1.0, gamma0 / unit, 1.0};
	spec.gradient_mode = GradientMode::FiniteDifference;
	spec.evaluate = [&scaled, kind](std::span<const double> p, std::span<double>) {
		return emos_mean_crps(scaled, kind, p[0], p[1], p[2] * p[2], p[3] * p[3]);
	};

	EmosFitResult out;
	out.initial_mean_crps = unit * spec.evaluate(spec.initial_point, {});
	out.optimization = minimize(spec);
	auto &opt = out.optimization;
	opt.point[0] *= unit;
	opt.point[2] *= unit;
	opt.value *= unit;
	for (auto &v : opt.accepted_values) {
		v *= unit;
	}
	const auto &p = opt.point;
	out.params.a = p[0];
	out.params.b = p[1];
	out.params.c = p[2] * p[2];
	out.params.d = p[3] * p[3];
	out.params.kind = kind;
	out.params.converged = opt.converged;
	out.final_mean_crps = opt.value;
	return out;
}

namespace {

std::vector<EmosSample> collect_samples(const EnsembleSeries &series, std::span<const std::size_t> rows) {
	std::vector<EmosSample> samples;
	samples.reserve(rows.size());
	for (const auto r : rows) {
		const auto &obs = series.observations().at(r);
		if (!obs) {
			throw std::invalid_argument("EMOS fit: row " + format_iso8601(series.times()[r]) + " has no observation");
		}
		const auto m = ensemble_moments(series.row(r));
		samples.push_back({m.mean, m.variance, *obs});
	}
	return samples;
}

} // namespace

EmosParameters fit(const EnsembleSeries &series, std::span<const std::size_t> rows, DistKind kind) {
	const auto samples = collect_samples(series, rows);
	auto params = fit_detailed(samples, kind).params;
	if (!rows.empty()) {
		params.fitted_at = series.times()[rows.back()];
	}
	return params;
}

EmosParameters fit(const EnsembleSeries &training, DistKind kind) {
	std::vector<std::size_t> rows;
	for (std::size_t t = 0; t < training.size(); ++t) {
		if (training.observations()[t]) {
			rows.push_back(t);
		}
	}
	return fit(training, rows, kind);
}

PredictiveDistribution calibrate(const EmosParameters &params, std::span<const double> row) {
	const auto m = ensemble_moments(row);
	const double var = params.c + params.d * m.variance;
	if (!(var > 0.0)) {
		throw DegenerateScale("calibrate: predictive variance c + d*S^2 is zero");
	}
	return PredictiveDistribution(params.kind, emos_location(params, m.mean), std::sqrt(var));
}

RollingResult rolling_calibrate(const EnsembleSeries &series, DistKind kind, const RollingOptions &options) {
	if (options.window_days == 0) {
		throw std::invalid_argument("rolling_calibrate: window_days must be >= 1");
	}
	const auto window = static_cast<std::int64_t>(options.window_days);
	const std::size_t min_days =
	    options.min_days.value_or(static_cast<std::size_t>(std::ceil(0.75 * static_cast<double>(window))));

	RollingResult out;
	if (series.size() == 0) {
		return out;
	}

	std::map<std::int64_t, std::vector<std::size_t>> rows_by_day;
	for (std::size_t t = 0; t < series.size(); ++t) {
		rows_by_day[series.origin_day(t)].push_back(t);
	}
	const std::int64_t first_series_day = rows_by_day.begin()->first;
	const std::int64_t start_day = std::max(first_series_day + window, options.first_day.value_or(first_series_day));

	std::vector<std::size_t> training;
	for (auto it = rows_by_day.lower_bound(start_day); it != rows_by_day.end(); ++it) {
		const std::int64_t day = it->first;
		training.clear();
		std::size_t days_with_data = 0;
		for (auto w = rows_by_day.lower_bound(day - window); w != it; ++w) {
			bool any = false;
			for (const auto r : w->second) {
				if (series.observations()[r]) {
					training.push_back(r);
					any = true;
				}
			}
			days_with_data += any ? 1 : 0;
		}
		const auto date = format_date(day * kSecondsPerDay);
		if (days_with_data < min_days || training.size() < 2) {
			out.warnings.push_back(fmt::format("{} h{} {}: skipped, {} of {} window days have observations",
			                                   series.variable(), series.horizon_h(), date, days_with_data, window));
			continue;
		}
		if (days_with_data < options.window_days) {
			out.warnings.push_back(fmt::format("{} h{} {}: fitted on {} of {} window days", series.variable(),
			                                   series.horizon_h(), date, days_with_data, window));
		}
		EmosParameters params = fit(series, training, kind);
		params.fitted_at = day * kSecondsPerDay;
		params.window_days = options.window_days;
		if (!params.converged) {
			out.warnings.push_back(
			    fmt::format("{} h{} {}: optimizer did not converge", series.variable(), series.horizon_h(), date));
		}
		const std::size_t params_index = out.parameters.size();
		out.parameters.push_back(params);
		for (const auto r : it->second) {
			try {
				out.steps.push_back({series.times()[r], r, calibrate(params, series.row(r)), params_index});
			} catch (const DegenerateScale &) {
				out.warnings.push_back(fmt::format("{} {}: degenerate predictive scale", series.variable(),
				                                   format_iso8601(series.times()[r])));
			}
		}
	}
	return out;
}

} // namespace windcal
