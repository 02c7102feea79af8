#include "windcal/strategies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>

namespace windcal {

namespace {

template <typename F>
void parallel_for(std::size_t n, std::size_t jobs, F &&body) {
	if (jobs <= 1 || n <= 1) {
		for (std::size_t i = 0; i < n; ++i) {
			body(i);
		}
		return;
	}
	std::atomic<std::size_t> next{0};
	std::vector<std::jthread> workers;
	const auto count = std::min(jobs, n);
	workers.reserve(count);
	for (std::size_t w = 0; w < count; ++w) {
		workers.emplace_back([&] {
			for (std::size_t i = next++; i < n; i = next++) {
				body(i);
			}
		});
	}
}

const EnsembleSeries &ensemble_for(const DatasetBundle &bundle, const std::string &var, int horizon_h) {
	const auto v = bundle.weather_ensembles.find(var);
	if (v == bundle.weather_ensembles.end()) {
		throw std::invalid_argument("bundle has no ensembles for '" + var + "'");
	}
	const auto h = v->second.find(horizon_h);
	if (h == v->second.end()) {
		throw std::invalid_argument(fmt::format("bundle has no {} ensembles at horizon {} h", var, horizon_h));
	}
	return h->second;
}

std::vector<std::string> model_weather(ModelKind kind) {
	switch (kind) {
	case ModelKind::NoWeather:
		return {};
	case ModelKind::FourierLinear:
		return {variables::kWindSpeed};
	default:
		return weather_variables();
	}
}

double hour_of(Timestamp t) {
	return static_cast<double>(t - day_index(t) * kSecondsPerDay) / static_cast<double>(kSecondsPerHour);
}

std::optional<double> lag24(const DatasetBundle &bundle, Timestamp t) {
	return bundle.power_observed.at(t - 24 * kSecondsPerHour);
}

std::uint64_t tie_seed(const StrategySpec &spec, int horizon_h, Timestamp t) {
	return derive_seed(spec.seed, 0x7199, static_cast<std::uint64_t>(horizon_h), static_cast<std::uint64_t>(t));
}

/// Counts forecast days preceding the evaluation span.
std::size_t history_days(const EnsembleSeries &series, std::int64_t test_day) {
	std::set<std::int64_t> days;
	for (std::size_t t = 0; t < series.size(); ++t) {
		const auto d = series.origin_day(t);
		if (d < test_day && series.observations()[t]) {
			days.insert(d);
		}
	}
	return days.empty() ? 0 : static_cast<std::size_t>(test_day - *days.begin());
}

StrategyRun score_sample_ensemble(const EnsembleSeries &power, const CellInputs &cell, const StrategySpec &spec) {
	std::vector<Timestamp> times;
	std::vector<double> crps;
	auto hist = empty_histogram(HistogramKind::VerificationRank, power.member_count() + 1);
	for (std::size_t t = 0; t < power.size(); ++t) {
		const auto &obs = power.observations()[t];
		if (power.origin_day(t) < cell.test_start_day || !obs) {
			continue;
		}
		times.push_back(power.times()[t]);
		crps.push_back(sample_crps(power.row(t), *obs));
		accumulate(hist, verification_rank(power.row(t), *obs, tie_seed(spec, cell.horizon_h, power.times()[t])));
	}
	if (times.empty()) {
		throw std::runtime_error("no evaluable timesteps in the evaluation span");
	}
	StrategyRun run;
	run.report = make_report(std::string(to_string(spec.id)), std::string(to_string(cell.model->kind())),
	                         cell.horizon_h, ScoringRule::SampleCrps, std::move(times), std::move(crps),
	                         std::move(hist));
	return run;
}

StrategyRun score_calibrated(const EnsembleSeries &power, const CellInputs &cell, const StrategySpec &spec) {
	RollingOptions options;
	options.window_days = spec.window_days;
	options.first_day = cell.test_start_day;
	auto calibration = rolling_calibrate(power, spec.power_dist_kind, options);

	std::vector<Timestamp> times;
	std::vector<double> crps;
	auto hist = empty_histogram(HistogramKind::Pit, spec.pit_bins);
	for (const auto &step : calibration.steps) {
		const auto &obs = power.observations()[step.row];
		if (!obs) {
			continue;
		}
		times.push_back(step.time);
		crps.push_back(crps_closed_form(step.distribution, *obs));
		accumulate(hist, pit_value(step.distribution, *obs));
	}
	if (times.empty()) {
		throw std::runtime_error("no evaluable timesteps in the evaluation span");
	}
	StrategyRun run;
	run.report = make_report(std::string(to_string(spec.id)), std::string(to_string(cell.model->kind())),
	                         cell.horizon_h, ScoringRule::ClosedFormCrps, std::move(times), std::move(crps),
	                         std::move(hist));
	run.warnings = calibration.warnings;
	run.power_calibration = std::move(calibration);
	return run;
}

} // namespace

std::string_view to_string(StrategyId id) {
	switch (id) {
	case StrategyId::Raw:
		return "raw";
	case StrategyId::OneStepP:
		return "one_step_p";
	case StrategyId::OneStepW:
		return "one_step_w";
	case StrategyId::TwoStepWP:
		return "two_step_wp";
	}
	return "unknown";
}

std::string_view display_name(StrategyId id) {
	switch (id) {
	case StrategyId::Raw:
		return "Raw";
	case StrategyId::OneStepP:
		return "One-Step-P";
	case StrategyId::OneStepW:
		return "One-Step-W";
	case StrategyId::TwoStepWP:
		return "Two-Step-WP";
	}
	return "unknown";
}

StrategyId parse_strategy_id(std::string_view name) {
	for (const auto id : {StrategyId::Raw, StrategyId::OneStepP, StrategyId::OneStepW, StrategyId::TwoStepWP}) {
		if (name == to_string(id) || name == display_name(id)) {
			return id;
		}
	}
	throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

DistKind weather_dist_kind(const std::string &variable, DistKind wind_speed_kind) {
	return variable == variables::kWindSpeed ? wind_speed_kind : DistKind::Normal;
}

std::int64_t test_start_day(const DatasetBundle &bundle) {
	if (!bundle.metadata.test_start) {
		throw std::invalid_argument("bundle metadata lacks test_start (train/test split)");
	}
	return day_index(*bundle.metadata.test_start);
}

FeatureFrame training_frame(const DatasetBundle &bundle, ModelKind kind, int horizon_h) {
	const auto &reference = ensemble_for(bundle, variables::kWindSpeed, horizon_h);
	const auto test_day = test_start_day(bundle);
	const auto names = model_weather(kind);
	const bool uses_lag = kind != ModelKind::FourierLinear;

	std::vector<const TimeSeries *> observed;
	for (const auto &n : names) {
		const auto it = bundle.weather_observed.find(n);
		if (it == bundle.weather_observed.end()) {
			throw std::invalid_argument("bundle has no observed '" + n + "'");
		}
		observed.push_back(&it->second);
	}

	std::vector<Timestamp> times;
	Matrix weather(0, names.size());
	std::vector<double> lag, target;
	std::vector<double> row(names.size());
	for (std::size_t t = 0; t < reference.size(); ++t) {
		if (reference.origin_day(t) >= test_day) {
			break;
		}
		const Timestamp time = reference.times()[t];
		const auto y = bundle.power_observed.at(time);
		const auto l = lag24(bundle, time);
		if (!y || (uses_lag && !l)) {
			continue;
		}
		bool complete = true;
		for (std::size_t k = 0; k < names.size() && complete; ++k) {
			const auto v = observed[k]->at(time);
			complete = v.has_value();
			row[k] = v.value_or(0.0);
		}
		if (!complete) {
			continue;
		}
		times.push_back(time);
		if (!names.empty()) {
			weather.append_row(row);
		}
		if (uses_lag) {
			lag.push_back(*l);
		}
		target.push_back(*y);
	}
	if (names.empty()) {
		weather = Matrix();
	}
	return make_feature_frame(std::move(times), names, std::move(weather), std::move(lag), std::move(target),
	                          kind != ModelKind::FourierLinear);
}

ForecastModel fit_forecast_model(const DatasetBundle &bundle, ModelKind kind, int horizon_h, std::uint64_t seed,
                                 std::size_t n_trees) {
	const auto frame = training_frame(bundle, kind, horizon_h);
	auto model = [&] {
		switch (kind) {
		case ModelKind::Linear:
			return fit_linear(frame);
		case ModelKind::FourierLinear:
			return fit_fourier_linear(frame);
		case ModelKind::RandomForest:
			return fit_random_forest(frame, n_trees, seed);
		case ModelKind::Mlp:
			return fit_mlp(frame, seed);
		case ModelKind::NoWeather:
			return fit_no_weather(frame);
		}
		throw std::invalid_argument("unknown model kind");
	}();
	model.set_horizon(horizon_h);
	return model;
}

EnsembleSeries raw_power_ensemble(const DatasetBundle &bundle, const ForecastModel &model, int horizon_h) {
	const auto &names = model.schema().weather;
	const auto &reference = ensemble_for(bundle, variables::kWindSpeed, horizon_h);
	std::vector<const EnsembleSeries *> inputs;
	for (const auto &n : names) {
		const auto &s = ensemble_for(bundle, n, horizon_h);
		if (s.times() != reference.times() || s.member_count() != reference.member_count()) {
			throw std::invalid_argument(
			    fmt::format("ensembles of '{}' and '{}' are misaligned at horizon {} h", n, reference.variable(), horizon_h));
		}
		inputs.push_back(&s);
	}
	const std::size_t m = reference.member_count();
	std::vector<Timestamp> times;
	std::vector<std::optional<double>> obs;
	Matrix members(0, m);
	Matrix weather(m, names.size());
	for (std::size_t t = 0; t < reference.size(); ++t) {
		const Timestamp time = reference.times()[t];
		SharedInputs shared;
		if (model.schema().uses_lag24) {
			const auto l = lag24(bundle, time);
			if (!l) {
				continue;
			}
			shared.lag24_power = *l;
		}
		shared.dummies = encode_dummies(model.schema().dummies, time);
		shared.hour_of_day = hour_of(time);
		for (std::size_t k = 0; k < inputs.size(); ++k) {
			const auto row = inputs[k]->row(t);
			for (std::size_t i = 0; i < m; ++i) {
				weather(i, k) = row[i];
			}
		}
		members.append_row(predict_ensemble(model, names, weather, shared));
		times.push_back(time);
		obs.push_back(bundle.power_observed.at(time));
	}
	return EnsembleSeries("power", horizon_h, std::move(times), std::move(members), std::move(obs));
}

CellInputs prepare_cell(const DatasetBundle &bundle, std::shared_ptr<const ForecastModel> model, int horizon_h) {
	CellInputs cell;
	cell.bundle = &bundle;
	cell.horizon_h = horizon_h;
	cell.test_start_day = test_start_day(bundle);
	cell.raw_power = raw_power_ensemble(bundle, *model, horizon_h);
	cell.model = std::move(model);
	return cell;
}

WeatherCalibration calibrate_weather(const DatasetBundle &bundle, int horizon_h, const StrategySpec &spec,
                                     const std::vector<std::string> &variables) {
	WeatherCalibration out;
	out.horizon_h = horizon_h;
	const auto test_day = test_start_day(bundle);
	for (const auto &var : variables) {
		RollingOptions options;
		options.window_days = spec.window_days;
		options.first_day = test_day - static_cast<std::int64_t>(spec.window_days);
		out.by_variable[var] = rolling_calibrate(ensemble_for(bundle, var, horizon_h),
		                                         weather_dist_kind(var, spec.wind_speed_dist_kind), options);
	}
	return out;
}

EnsembleSeries weather_calibrated_power_ensemble(const CellInputs &cell, const StrategySpec &spec) {
	if (spec.sample_count == 0) {
		throw std::invalid_argument("sample_count must be >= 1");
	}
	if (!cell.weather) {
		throw std::invalid_argument("weather calibration missing for this cell");
	}
	const auto &model = *cell.model;
	const auto &names = model.schema().weather;
	const auto &bundle = *cell.bundle;

	// time -> calibrated law, per model input
	std::vector<std::unordered_map<Timestamp, const PredictiveDistribution *>> laws(names.size());
	std::vector<Timestamp> candidate_times;
	for (std::size_t k = 0; k < names.size(); ++k) {
		const auto it = cell.weather->by_variable.find(names[k]);
		if (it == cell.weather->by_variable.end()) {
			throw std::invalid_argument("weather calibration lacks '" + names[k] + "'");
		}
		for (const auto &step : it->second.steps) {
			laws[k].emplace(step.time, &step.distribution);
			if (k == 0) {
				candidate_times.push_back(step.time);
			}
		}
	}
	if (names.empty()) {
		// Nothing to calibrate: the model ignores weather.
		const auto first = cell.test_start_day - static_cast<std::int64_t>(spec.window_days);
		for (std::size_t t = 0; t < cell.raw_power.size(); ++t) {
			if (cell.raw_power.origin_day(t) >= first) {
				candidate_times.push_back(cell.raw_power.times()[t]);
			}
		}
	}

	const std::size_t m = spec.sample_count;
	std::vector<Timestamp> times;
	std::vector<std::optional<double>> obs;
	Matrix members(0, m);
	Matrix weather(m, names.size());
	std::vector<double> draws(m);
	for (const Timestamp time : candidate_times) {
		bool complete = true;
		for (std::size_t k = 0; k < names.size() && complete; ++k) {
			complete = laws[k].count(time) > 0;
		}
		if (!complete) {
			continue;
		}
		SharedInputs shared;
		if (model.schema().uses_lag24) {
			const auto l = lag24(bundle, time);
			if (!l) {
				continue;
			}
			shared.lag24_power = *l;
		}
		shared.dummies = encode_dummies(model.schema().dummies, time);
		shared.hour_of_day = hour_of(time);
		for (std::size_t k = 0; k < names.size(); ++k) {
			// Seeded by variable, horizon and time only: every model sees the same weather samples.
			std::mt19937_64 rng(derive_seed(spec.seed, hash_string(names[k]), static_cast<std::uint64_t>(cell.horizon_h),
			                                static_cast<std::uint64_t>(time)));
			sample_into(*laws[k].at(time), draws, rng);
			for (std::size_t i = 0; i < m; ++i) {
				weather(i, k) = draws[i];
			}
		}
		members.append_row(predict_ensemble(model, names, weather, shared));
		times.push_back(time);
		obs.push_back(bundle.power_observed.at(time));
	}
	return EnsembleSeries("power", cell.horizon_h, std::move(times), std::move(members), std::move(obs));
}

StrategyRun run_raw(const CellInputs &cell, const StrategySpec &spec) {
	return score_sample_ensemble(cell.raw_power, cell, spec);
}

StrategyRun run_one_step_p(const CellInputs &cell, const StrategySpec &spec) {
	if (spec.window_days == 0) {
		throw std::invalid_argument("window_days must be >= 1");
	}
	const auto available = history_days(cell.raw_power, cell.test_start_day);
	if (available < spec.window_days) {
		throw std::invalid_argument(fmt::format("calibration window of {} days exceeds the {} days of history",
		                                        spec.window_days, available));
	}
	return score_calibrated(cell.raw_power, cell, spec);
}

StrategyRun run_one_step_w(const CellInputs &cell, const StrategySpec &spec) {
	const auto power = weather_calibrated_power_ensemble(cell, spec);
	auto run = score_sample_ensemble(power, cell, spec);
	return run;
}

StrategyRun run_two_step_wp(const CellInputs &cell, const StrategySpec &spec) {
	const auto power = weather_calibrated_power_ensemble(cell, spec);
	return score_calibrated(power, cell, spec);
}

StrategyRun run_strategy(const CellInputs &cell, const StrategySpec &spec) {
	switch (spec.id) {
	case StrategyId::Raw:
		return run_raw(cell, spec);
	case StrategyId::OneStepP:
		return run_one_step_p(cell, spec);
	case StrategyId::OneStepW:
		return run_one_step_w(cell, spec);
	case StrategyId::TwoStepWP:
		return run_two_step_wp(cell, spec);
	}
	throw std::invalid_argument("unknown strategy");
}

// ---------------------------------------------------------------------------------------------

const ScoreReport *ExperimentResult::find(StrategyId strategy, ModelKind model, int horizon_h) const {
	for (const auto &r : reports) {
		if (r.strategy_id == to_string(strategy) && r.model_id == to_string(model) && r.horizon_h == horizon_h) {
			return &r;
		}
	}
	return nullptr;
}

void validate(const ExperimentConfig &config, const DatasetBundle &bundle) {
	if (config.strategies.empty()) {
		throw std::invalid_argument("strategies: at least one strategy is required");
	}
	if (config.models.empty()) {
		throw std::invalid_argument("models: at least one model is required");
	}
	if (config.horizons.empty()) {
		throw std::invalid_argument("horizons: at least one horizon is required");
	}
	if (config.compute_crpss &&
	    std::find(config.strategies.begin(), config.strategies.end(), StrategyId::Raw) == config.strategies.end()) {
		throw std::invalid_argument("strategies: CRPSS requires the raw strategy as benchmark");
	}
	if (config.window_days == 0) {
		throw std::invalid_argument("window_days must be >= 1");
	}
	if (config.sample_count && *config.sample_count < 2) {
		throw std::invalid_argument("sample_count must be >= 2");
	}
	if (config.pit_bins == 0) {
		throw std::invalid_argument("pit_bins must be >= 1");
	}
	if (config.power_dist_kind == DistKind::Normal) {
		throw std::invalid_argument("power_distribution must be truncated_normal or gamma");
	}
	if (config.wind_speed_dist_kind == DistKind::Normal) {
		throw std::invalid_argument("wind_speed_distribution must be truncated_normal or gamma");
	}
	const auto available = bundle.horizons();
	for (const int h : config.horizons) {
		if (h <= 0 || h % bundle.metadata.resolution_h != 0) {
			throw std::invalid_argument(
			    fmt::format("horizons: {} h is not a multiple of the {} h data resolution", h, bundle.metadata.resolution_h));
		}
		if (std::find(available.begin(), available.end(), h) == available.end()) {
			throw std::invalid_argument(fmt::format("horizons: bundle has no ensembles at {} h", h));
		}
	}
	test_start_day(bundle);
}

ExperimentResult run_experiment(const DatasetBundle &bundle, const ExperimentConfig &config) {
	validate(config, bundle);
	ExperimentResult result;
	const std::size_t n_models = config.models.size();
	const std::size_t n_horizons = config.horizons.size();
	const std::size_t sample_count = config.sample_count.value_or(bundle.member_count());

	auto spec_for = [&](StrategyId id, int horizon) {
		StrategySpec spec;
		spec.id = id;
		spec.power_dist_kind = config.power_dist_kind;
		spec.wind_speed_dist_kind = config.wind_speed_dist_kind;
		spec.window_days = config.window_days;
		spec.sample_count = sample_count;
		spec.pit_bins = config.pit_bins;
		spec.seed = derive_seed(config.seed, static_cast<std::uint64_t>(horizon));
		return spec;
	};

	// Stage 1: one fitted model and raw power ensemble per (model, horizon).
	std::vector<std::optional<CellInputs>> cells(n_models * n_horizons);
	std::vector<std::string> cell_errors(cells.size());
	parallel_for(cells.size(), config.jobs, [&](std::size_t i) {
		const auto kind = config.models[i / n_horizons];
		const int h = config.horizons[i % n_horizons];
		try {
			auto model = std::make_shared<const ForecastModel>(fit_forecast_model(
			    bundle, kind, h, derive_seed(config.seed, hash_string(to_string(kind)), static_cast<std::uint64_t>(h)),
			    config.n_trees));
			cells[i] = prepare_cell(bundle, std::move(model), h);
		} catch (const std::exception &e) {
			cell_errors[i] = e.what();
		}
	});

	// Stage 2: weather calibration per horizon, shared by every model.
	const bool needs_weather =
	    std::any_of(config.strategies.begin(), config.strategies.end(),
	                [](StrategyId id) { return id == StrategyId::OneStepW || id == StrategyId::TwoStepWP; });
	std::vector<std::string> weather_names;
	for (const auto &var : weather_variables()) {
		if (bundle.weather_ensembles.count(var)) {
			weather_names.push_back(var);
		}
	}
	std::vector<std::shared_ptr<const WeatherCalibration>> weather(n_horizons);
	std::vector<std::string> weather_errors(n_horizons);
	if (needs_weather) {
		parallel_for(n_horizons, config.jobs, [&](std::size_t i) {
			const int h = config.horizons[i];
			try {
				weather[i] = std::make_shared<const WeatherCalibration>(
				    calibrate_weather(bundle, h, spec_for(StrategyId::OneStepW, h), weather_names));
			} catch (const std::exception &e) {
				weather_errors[i] = e.what();
			}
		});
	}

	// Stage 3: strategy cells.
	const std::size_t n_strategies = config.strategies.size();
	const std::size_t n_runs = n_models * n_horizons * n_strategies;
	std::vector<std::optional<StrategyRun>> runs(n_runs);
	std::vector<std::string> run_errors(n_runs);
	parallel_for(n_runs, config.jobs, [&](std::size_t i) {
		const std::size_t cell_index = i / n_strategies;
		const auto id = config.strategies[i % n_strategies];
		const std::size_t h_index = cell_index % n_horizons;
		if (!cells[cell_index]) {
			run_errors[i] = "model fit failed: " + cell_errors[cell_index];
			return;
		}
		CellInputs cell = *cells[cell_index];
		if (id == StrategyId::OneStepW || id == StrategyId::TwoStepWP) {
			if (!weather[h_index]) {
				run_errors[i] = "weather calibration failed: " + weather_errors[h_index];
				return;
			}
			cell.weather = weather[h_index];
		}
		try {
			runs[i] = run_strategy(cell, spec_for(id, cell.horizon_h));
		} catch (const std::exception &e) {
			run_errors[i] = e.what();
		}
	});

	// Assembly, in deterministic grid order.
	for (std::size_t c = 0; c < cells.size(); ++c) {
		if (cells[c]) {
			result.models.push_back(cells[c]->model);
		}
	}
	for (std::size_t i = 0; i < n_runs; ++i) {
		const std::size_t cell_index = i / n_strategies;
		const auto id = config.strategies[i % n_strategies];
		const auto model = config.models[cell_index / n_horizons];
		const int h = config.horizons[cell_index % n_horizons];
		if (!runs[i]) {
			result.failures.push_back({std::string(to_string(id)), std::string(to_string(model)), h, run_errors[i]});
			continue;
		}
		auto &run = *runs[i];
		const std::string group = fmt::format("{}/{}", to_string(model), to_string(id));
		for (const auto &w : run.warnings) {
			result.warnings.push_back(group + ": " + w);
		}
		for (const auto &p : run.power_calibration.parameters) {
			result.traces.push_back({"power/" + group, h, p});
		}
		const bool post = id == StrategyId::OneStepP || id == StrategyId::TwoStepWP;
		result.histograms.push_back({group, "power", h, post ? "power_post" : "power_pre", run.report.histogram});
		result.reports.push_back(std::move(run.report));
	}

	// Weather stage diagnostics over the evaluation span.
	if (needs_weather) {
		const auto test_day = test_start_day(bundle);
		for (std::size_t i = 0; i < n_horizons; ++i) {
			if (!weather[i]) {
				continue;
			}
			const int h = config.horizons[i];
			const auto spec = spec_for(StrategyId::OneStepW, h);
			for (const auto &var : weather_names) {
				const auto &series = ensemble_for(bundle, var, h);
				const auto &rolling = weather[i]->by_variable.at(var);
				auto pre = empty_histogram(HistogramKind::VerificationRank, series.member_count() + 1);
				for (std::size_t t = 0; t < series.size(); ++t) {
					const auto &obs = series.observations()[t];
					if (series.origin_day(t) >= test_day && obs) {
						accumulate(pre, verification_rank(series.row(t), *obs, tie_seed(spec, h, series.times()[t])));
					}
				}
				auto post = empty_histogram(HistogramKind::Pit, config.pit_bins);
				for (const auto &step : rolling.steps) {
					const auto &obs = series.observations()[step.row];
					if (series.origin_day(step.row) >= test_day && obs) {
						accumulate(post, pit_value(step.distribution, *obs));
					}
				}
				result.histograms.push_back({"weather", var, h, "weather_pre", std::move(pre)});
				result.histograms.push_back({"weather", var, h, "weather_post", std::move(post)});
				for (const auto &p : rolling.parameters) {
					result.traces.push_back({var, h, p});
				}
				for (const auto &w : rolling.warnings) {
					result.warnings.push_back("weather: " + w);
				}
			}
		}
	}

	// Skill scores against Raw over shared timestamps.
	if (config.compute_crpss) {
		for (auto &report : result.reports) {
			const auto model = parse_model_kind(report.model_id);
			const auto *raw = result.find(StrategyId::Raw, model, report.horizon_h);
			if (!raw) {
				continue;
			}
			std::unordered_map<Timestamp, double> bench;
			for (std::size_t t = 0; t < raw->times.size(); ++t) {
				bench.emplace(raw->times[t], raw->crps_values[t]);
			}
			double model_sum = 0.0, bench_sum = 0.0;
			std::size_t n = 0;
			for (std::size_t t = 0; t < report.times.size(); ++t) {
				const auto it = bench.find(report.times[t]);
				if (it != bench.end()) {
					model_sum += report.crps_values[t];
					bench_sum += it->second;
					++n;
				}
			}
			if (n > 0 && bench_sum > 0.0) {
				report.crpss_vs_raw = crpss(model_sum / static_cast<double>(n), bench_sum / static_cast<double>(n));
			}
		}
	}
	return result;
}

} // namespace windcal
