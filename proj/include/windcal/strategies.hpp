#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "windcal/dataio.hpp"
#include "windcal/emos.hpp"
#include "windcal/models.hpp"
#include "windcal/scoring.hpp"

namespace windcal {

enum class StrategyId { Raw, OneStepP, OneStepW, TwoStepWP };

/// Identifier used in configs and CSV files: raw, one_step_p, one_step_w, two_step_wp.
std::string_view to_string(StrategyId id);
/// Human-readable label: Raw, One-Step-P, One-Step-W, Two-Step-WP.
std::string_view display_name(StrategyId id);
StrategyId parse_strategy_id(std::string_view name);

struct StrategySpec {
	StrategyId id = StrategyId::Raw;
	DistKind power_dist_kind = DistKind::TruncatedNormalAtZero;
	DistKind wind_speed_dist_kind = DistKind::TruncatedNormalAtZero;
	std::size_t window_days = 40;
	std::size_t sample_count = 51;
	std::size_t pit_bins = 20;
	std::uint64_t seed = 0;
};

/// Predictive law used for a weather variable in the weather calibration step.
DistKind weather_dist_kind(const std::string &variable, DistKind wind_speed_kind);

/// Per-variable rolling EMOS results for one horizon.
struct WeatherCalibration {
	int horizon_h = 0;
	std::map<std::string, RollingResult> by_variable;
};

/**
 * Everything the strategy runners need for one (model, horizon) cell. Built by prepare_cell():
 * the fitted model, the raw power ensemble (each weather member passed through the model) and
 * the first forecast day of the evaluation span.
 */
struct CellInputs {
	const DatasetBundle *bundle = nullptr;
	int horizon_h = 0;
	std::shared_ptr<const ForecastModel> model;
	EnsembleSeries raw_power;
	std::int64_t test_start_day = 0;
	/// Required by One-Step-W and Two-Step-WP.
	std::shared_ptr<const WeatherCalibration> weather;
};

/// First forecast-origin day of the evaluation span (from bundle metadata).
std::int64_t test_start_day(const DatasetBundle &bundle);

/// Training frame for `kind` at horizon h: observed weather at the horizon's valid times in the
/// training span, the lagged observed power and calendar dummies.
FeatureFrame training_frame(const DatasetBundle &bundle, ModelKind kind, int horizon_h);

/// Fits the power model on the training span. `n_trees` applies to random forests.
ForecastModel fit_forecast_model(const DatasetBundle &bundle, ModelKind kind, int horizon_h, std::uint64_t seed,
                                 std::size_t n_trees = 500);

/// Power ensembles from raw weather members; rows lacking the 24 h lag are dropped.
/// Throws std::invalid_argument when the weather series of the horizon are misaligned.
EnsembleSeries raw_power_ensemble(const DatasetBundle &bundle, const ForecastModel &model, int horizon_h);

CellInputs prepare_cell(const DatasetBundle &bundle, std::shared_ptr<const ForecastModel> model, int horizon_h);

/// Rolling EMOS of each weather variable used by the models, starting window_days before the
/// evaluation span so that Two-Step-WP has calibrated history for its power fit.
WeatherCalibration calibrate_weather(const DatasetBundle &bundle, int horizon_h, const StrategySpec &spec,
                                     const std::vector<std::string> &variables);

struct StrategyRun {
	ScoreReport report;
	RollingResult power_calibration; // empty for Raw and One-Step-W
	std::vector<std::string> warnings;
};

StrategyRun run_raw(const CellInputs &cell, const StrategySpec &spec);
StrategyRun run_one_step_p(const CellInputs &cell, const StrategySpec &spec);
StrategyRun run_one_step_w(const CellInputs &cell, const StrategySpec &spec);
StrategyRun run_two_step_wp(const CellInputs &cell, const StrategySpec &spec);
StrategyRun run_strategy(const CellInputs &cell, const StrategySpec &spec);

/// Power ensemble obtained by sampling the calibrated weather laws and passing the samples through
/// the model, for every time at which all model inputs are calibrated.
EnsembleSeries weather_calibrated_power_ensemble(const CellInputs &cell, const StrategySpec &spec);

struct ExperimentConfig {
	std::vector<StrategyId> strategies{StrategyId::Raw, StrategyId::OneStepP, StrategyId::OneStepW,
	                                   StrategyId::TwoStepWP};
	std::vector<ModelKind> models{ModelKind::Linear};
	std::vector<int> horizons;
	DistKind power_dist_kind = DistKind::TruncatedNormalAtZero;
	DistKind wind_speed_dist_kind = DistKind::TruncatedNormalAtZero;
	std::size_t window_days = 40;
	/// Defaults to the ensemble size.
	std::optional<std::size_t> sample_count;
	std::size_t pit_bins = 20;
	std::size_t n_trees = 500;
	std::uint64_t seed = 0;
	std::size_t jobs = 1;
	bool compute_crpss = true;
};

struct ParameterTrace {
	std::string variable; // weather variable or "power/<model>/<strategy>"
	int horizon_h;
	EmosParameters params;
};

struct HistogramRecord {
	std::string group;    // "weather" or "<model>/<strategy>"
	std::string variable; // weather variable or "power"
	int horizon_h;
	std::string stage;    // weather_pre, weather_post, power_pre, power_post
	HistogramCounts histogram;
};

struct FailedCell {
	std::string strategy;
	std::string model;
	int horizon_h;
	std::string error;
};

struct ExperimentResult {
	std::vector<ScoreReport> reports; // ordered by model, horizon, strategy
	std::vector<ParameterTrace> traces;
	std::vector<HistogramRecord> histograms;
	std::vector<std::shared_ptr<const ForecastModel>> models;
	std::vector<FailedCell> failures;
	std::vector<std::string> warnings;

	const ScoreReport *find(StrategyId strategy, ModelKind model, int horizon_h) const;
};

/// Throws std::invalid_argument for inconsistent configurations.
void validate(const ExperimentConfig &config, const DatasetBundle &bundle);

/// Runs strategies x models x horizons. Failures of individual cells are recorded and the rest of
/// the grid continues. CRPSS is computed against the Raw report of the same model and horizon over
/// the timestamps both reports share.
ExperimentResult run_experiment(const DatasetBundle &bundle, const ExperimentConfig &config);

} // namespace windcal
