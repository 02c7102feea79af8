#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "windcal/common.hpp"
#include "windcal/mlp.hpp"

namespace windcal {

enum class ModelKind { Linear, FourierLinear, RandomForest, Mlp, NoWeather };

std::string_view to_string(ModelKind kind);
/// Accepts "linear", "fourier_linear", "random_forest", "mlp", "no_weather".
ModelKind parse_model_kind(std::string_view name);

/// Training/prediction inputs for the power models.
struct FeatureFrame {
	std::vector<Timestamp> times;
	std::vector<std::string> weather_names;
	Matrix weather; // time x K
	/// Observed power 24 h before each target time. Empty when the model does not use it.
	std::vector<double> lag24_power;
	std::vector<std::string> dummy_names;
	Matrix dummies; // time x J, cells in {0, 1}
	std::vector<double> target_power;

	std::size_t rows() const noexcept { return times.size(); }
	/// Checks shapes, finiteness and dummy cells; throws std::invalid_argument.
	void validate(bool require_target) const;
};

/// Calendar dummies present in `times`: seasons (winter dropped), months (January dropped) and
/// years (earliest dropped). Names look like "season_summer", "month_07", "year_2021".
std::vector<std::string> candidate_dummy_names(std::span<const Timestamp> times);
/// Value (0 or 1) of a named dummy at time t. Throws std::invalid_argument for unknown names.
double dummy_value(std::string_view name, Timestamp t);
std::vector<double> encode_dummies(std::span<const std::string> names, Timestamp t);

/**
 * Assembles a frame and attaches calendar dummies. Candidate dummies that are collinear with the
 * intercept, lag, weather columns or previously kept dummies are dropped.
 */
FeatureFrame make_feature_frame(std::vector<Timestamp> times, std::vector<std::string> weather_names, Matrix weather,
                                std::vector<double> lag24_power, std::vector<double> target_power, bool with_dummies);

/// Raised when a regression design is not of full column rank.
class RankDeficientDesign : public std::runtime_error {
public:
	RankDeficientDesign(const std::string &what, std::vector<std::string> columns)
	    : std::runtime_error(what), columns_(std::move(columns)) {}
	const std::vector<std::string> &columns() const noexcept { return columns_; }

private:
	std::vector<std::string> columns_;
};

struct FeatureSchema {
	std::vector<std::string> weather;
	bool uses_lag24 = false;
	std::vector<std::string> dummies;
	/// FourierLinear only: which of cos1, sin1, cos2, sin2 are in the design.
	std::vector<std::string> harmonics;

	friend bool operator==(const FeatureSchema &, const FeatureSchema &) = default;
};

struct LinearState {
	std::vector<std::string> names; // "intercept" first
	std::vector<double> coefficients;
};

struct TreeNode {
	int feature = -1; // -1 marks a leaf
	double threshold = 0.0;
	int left = -1;
	int right = -1;
	double value = 0.0;
};

struct RegressionTree {
	std::vector<TreeNode> nodes;
	double predict(std::span<const double> x) const;
};

struct ForestState {
	std::vector<RegressionTree> trees;
	std::vector<std::string> feature_names;
	std::vector<std::uint64_t> split_counts;
};

using ModelState = std::variant<LinearState, ForestState, MlpModel>;

class ForecastModel {
public:
	ForecastModel(ModelKind kind, int horizon_h, FeatureSchema schema, ModelState state)
	    : kind_(kind), horizon_h_(horizon_h), schema_(std::move(schema)), state_(std::move(state)) {}

	ModelKind kind() const noexcept { return kind_; }
	int horizon_h() const noexcept { return horizon_h_; }
	void set_horizon(int h) noexcept { horizon_h_ = h; }
	const FeatureSchema &schema() const noexcept { return schema_; }
	const ModelState &state() const noexcept { return state_; }

	/// Predicts from a feature vector already laid out in schema order (see feature_vector()).
	double predict_features(std::span<const double> features) const;

private:
	ModelKind kind_;
	int horizon_h_;
	FeatureSchema schema_;
	ModelState state_;
};

/// Inputs shared by all members of one ensemble forecast.
struct SharedInputs {
	double lag24_power = 0.0;
	std::vector<double> dummies;
	double hour_of_day = 0.0;
};

/// Lays out one weather row plus shared inputs in the model's schema order. Weather columns are
/// matched by name; missing names or a dummy-count mismatch raise std::invalid_argument.
std::vector<double> feature_vector(const ForecastModel &model, std::span<const std::string> weather_names,
                                   std::span<const double> weather_row, const SharedInputs &shared);

double predict(const ForecastModel &model, std::span<const std::string> weather_names,
               std::span<const double> weather_row, const SharedInputs &shared);

/// One prediction per member row of `weather_members` (M x K), in input order.
std::vector<double> predict_ensemble(const ForecastModel &model, std::span<const std::string> weather_names,
                                     const Matrix &weather_members, const SharedInputs &shared);

ForecastModel fit_linear(const FeatureFrame &frame);
/// Regressors {1, S, S^2, S^3} plus the diurnal harmonics that are not collinear on the training hours.
ForecastModel fit_fourier_linear(const FeatureFrame &frame);
ForecastModel fit_random_forest(const FeatureFrame &frame, std::size_t n_trees, std::uint64_t seed);
ForecastModel fit_mlp(const FeatureFrame &frame, std::uint64_t seed, const MlpOptions &options = {});
/// Lag and dummies only; the frame must not carry weather columns.
ForecastModel fit_no_weather(const FeatureFrame &frame);

/// Writes "model,horizon_h,term,value" rows: coefficients or split counts.
void write_model_summary(const ForecastModel &model, std::ostream &out);

/// Ordinary least squares with a rank check. Columns are named for error reporting.
std::vector<double> least_squares(const Matrix &design, std::span<const double> target,
                                  std::span<const std::string> column_names);

} // namespace windcal
