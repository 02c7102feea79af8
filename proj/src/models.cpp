#include "windcal/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ranges.h>

namespace windcal {

namespace {

constexpr double kRankTolerance = 1e-9;

Eigen::MatrixXd to_eigen(const Matrix &m) {
	Eigen::MatrixXd out(m.rows(), m.cols());
	for (std::size_t r = 0; r < m.rows(); ++r) {
		for (std::size_t c = 0; c < m.cols(); ++c) {
			out(r, c) = m(r, c);
		}
	}
	return out;
}

/// Column-normalized rank so that unit differences (Pa vs. dummies) do not matter.
Eigen::Index normalized_rank(Eigen::MatrixXd x) {
	for (Eigen::Index c = 0; c < x.cols(); ++c) {
		const double n = x.col(c).norm();
		if (n > 0.0) {
			x.col(c) /= n;
		}
	}
	Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
	qr.setThreshold(kRankTolerance);
	return qr.rank();
}

std::string_view season_of(unsigned month) {
	switch (month) {
	case 12:
	case 1:
	case 2:
		return "winter";
	case 3:
	case 4:
	case 5:
		return "spring";
	case 6:
	case 7:
	case 8:
		return "summer";
	default:
		return "autumn";
	}
}

double hour_of(Timestamp t) {
	return static_cast<double>(t - day_index(t) * kSecondsPerDay) / static_cast<double>(kSecondsPerHour);
}

double harmonic_value(std::string_view name, double hour) {
	const double w = 2.0 * std::numbers::pi * hour / 24.0;
	if (name == "cos1") {
		return std::cos(w);
	}
	if (name == "sin1") {
		return std::sin(w);
	}
	if (name == "cos2") {
		return std::cos(2.0 * w);
	}
	if (name == "sin2") {
		return std::sin(2.0 * w);
	}
	throw std::invalid_argument("unknown harmonic '" + std::string(name) + "'");
}

ForecastModel fit_ols_model(ModelKind kind, const FeatureFrame &frame, FeatureSchema schema) {
	frame.validate(true);
	const std::size_t cols = 1 + schema.weather.size() + (schema.uses_lag24 ? 1 : 0) + schema.dummies.size();
	if (frame.rows() < cols + 1) {
		throw std::invalid_argument(fmt::format("linear fit needs at least {} rows, got {}", cols + 1, frame.rows()));
	}
	Matrix design(frame.rows(), cols);
	std::vector<std::string> names{"intercept"};
	names.insert(names.end(), schema.weather.begin(), schema.weather.end());
	if (schema.uses_lag24) {
		names.emplace_back("lag24_power");
	}
	names.insert(names.end(), schema.dummies.begin(), schema.dummies.end());
	for (std::size_t r = 0; r < frame.rows(); ++r) {
		std::size_t c = 0;
		design(r, c++) = 1.0;
		for (std::size_t k = 0; k < schema.weather.size(); ++k) {
			design(r, c++) = frame.weather(r, k);
		}
		if (schema.uses_lag24) {
			design(r, c++) = frame.lag24_power[r];
		}
		for (std::size_t j = 0; j < schema.dummies.size(); ++j) {
			design(r, c++) = frame.dummies(r, j);
		}
	}
	auto coef = least_squares(design, frame.target_power, names);
	return ForecastModel(kind, 0, std::move(schema), LinearState{std::move(names), std::move(coef)});
}

} // namespace

std::string_view to_string(ModelKind kind) {
	switch (kind) {
	case ModelKind::Linear:
		return "linear";
	case ModelKind::FourierLinear:
		return "fourier_linear";
	case ModelKind::RandomForest:
		return "random_forest";
	case ModelKind::Mlp:
		return "mlp";
	case ModelKind::NoWeather:
		return "no_weather";
	}
	return "unknown";
}

ModelKind parse_model_kind(std::string_view name) {
	for (const auto k : {ModelKind::Linear, ModelKind::FourierLinear, ModelKind::RandomForest, ModelKind::Mlp,
	                     ModelKind::NoWeather}) {
		if (name == to_string(k)) {
			return k;
		}
	}
	throw std::invalid_argument("unknown model kind '" + std::string(name) + "'");
}

void FeatureFrame::validate(bool require_target) const {
	const auto n = rows();
	if (weather.rows() != n && !(weather.rows() == 0 && weather_names.empty())) {
		throw std::invalid_argument("FeatureFrame: weather rows do not match times");
	}
	if (weather.cols() != weather_names.size() && weather.rows() > 0) {
		throw std::invalid_argument("FeatureFrame: weather columns do not match names");
	}
	if (!lag24_power.empty() && lag24_power.size() != n) {
		throw std::invalid_argument("FeatureFrame: lag24_power length does not match times");
	}
	if (dummies.rows() != n && !(dummies.rows() == 0 && dummy_names.empty())) {
		throw std::invalid_argument("FeatureFrame: dummy rows do not match times");
	}
	if (require_target && target_power.size() != n) {
		throw std::invalid_argument("FeatureFrame: target_power missing or misaligned");
	}
	auto finite = [](double v) { return std::isfinite(v); };
	if (!std::all_of(weather.data().begin(), weather.data().end(), finite) ||
	    !std::all_of(lag24_power.begin(), lag24_power.end(), finite) ||
	    !std::all_of(target_power.begin(), target_power.end(), finite)) {
		throw std::invalid_argument("FeatureFrame: missing or non-finite cell");
	}
	for (const double v : dummies.data()) {
		if (v != 0.0 && v != 1.0) {
			throw std::invalid_argument("FeatureFrame: dummy cell outside {0, 1}");
		}
	}
}

std::vector<std::string> candidate_dummy_names(std::span<const Timestamp> times) {
	std::set<std::string> seasons;
	std::set<unsigned> months;
	std::set<int> years;
	for (const auto t : times) {
		const auto c = to_civil(t);
		seasons.insert(std::string(season_of(c.month)));
		months.insert(c.month);
		years.insert(c.year);
	}
	std::vector<std::string> names;
	for (const auto *s : {"spring", "summer", "autumn"}) {
		if (seasons.count(s)) {
			names.push_back(fmt::format("season_{}", s));
		}
	}
	for (const auto m : months) {
		if (m != 1) {
			names.push_back(fmt::format("month_{:02d}", m));
		}
	}
	if (!years.empty()) {
		for (auto it = std::next(years.begin()); it != years.end(); ++it) {
			names.push_back(fmt::format("year_{}", *it));
		}
	}
	return names;
}

double dummy_value(std::string_view name, Timestamp t) {
	const auto c = to_civil(t);
	if (name.starts_with("season_")) {
		return season_of(c.month) == name.substr(7) ? 1.0 : 0.0;
	}
	if (name.starts_with("month_") && name.size() == 8) {
		return static_cast<unsigned>(std::stoi(std::string(name.substr(6)))) == c.month ? 1.0 : 0.0;
	}
	if (name.starts_with("year_")) {
		return std::stoi(std::string(name.substr(5))) == c.year ? 1.0 : 0.0;
	}
	throw std::invalid_argument("unknown dummy '" + std::string(name) + "'");
}

std::vector<double> encode_dummies(std::span<const std::string> names, Timestamp t) {
	std::vector<double> out;
	out.reserve(names.size());
	for (const auto &n : names) {
		out.push_back(dummy_value(n, t));
	}
	return out;
}

FeatureFrame make_feature_frame(std::vector<Timestamp> times, std::vector<std::string> weather_names, Matrix weather,
                                std::vector<double> lag24_power, std::vector<double> target_power, bool with_dummies) {
	FeatureFrame frame;
	frame.times = std::move(times);
	frame.weather_names = std::move(weather_names);
	frame.weather = std::move(weather);
	frame.lag24_power = std::move(lag24_power);
	frame.target_power = std::move(target_power);
	const auto n = frame.rows();
	if (!with_dummies || n == 0) {
		frame.validate(false);
		return frame;
	}

	// Base design: intercept, weather, lag. Dummies are admitted one at a time if they add rank.
	const auto k = frame.weather_names.size();
	const std::size_t base_cols = 1 + k + (frame.lag24_power.empty() ? 0 : 1);
	const auto candidates = candidate_dummy_names(frame.times);
	Eigen::MatrixXd design(n, base_cols + candidates.size());
	for (std::size_t r = 0; r < n; ++r) {
		design(r, 0) = 1.0;
		for (std::size_t c = 0; c < k; ++c) {
			design(r, 1 + c) = frame.weather(r, c);
		}
		if (!frame.lag24_power.empty()) {
			design(r, 1 + k) = frame.lag24_power[r];
		}
	}
	Eigen::Index cols = static_cast<Eigen::Index>(base_cols);
	Eigen::Index rank = normalized_rank(design.leftCols(cols));
	for (const auto &name : candidates) {
		for (std::size_t r = 0; r < n; ++r) {
			design(r, cols) = dummy_value(name, frame.times[r]);
		}
		const auto trial = normalized_rank(design.leftCols(cols + 1));
		if (trial > rank) {
			rank = trial;
			++cols;
			frame.dummy_names.push_back(name);
		}
	}
	frame.dummies = Matrix(n, frame.dummy_names.size());
	for (std::size_t r = 0; r < n; ++r) {
		for (std::size_t j = 0; j < frame.dummy_names.size(); ++j) {
			frame.dummies(r, j) = design(r, static_cast<Eigen::Index>(base_cols + j));
		}
	}
	frame.validate(false);
	return frame;
}

std::vector<double> least_squares(const Matrix &design, std::span<const double> target,
                                  std::span<const std::string> column_names) {
	if (design.rows() != target.size()) {
		throw std::invalid_argument("least_squares: design and target rows differ");
	}
	Eigen::MatrixXd x = to_eigen(design);
	const auto p = x.cols();
	if (normalized_rank(x) < p) {
		// Name every column that lies in the span of the columns before it.
		std::vector<std::string> collinear;
		Eigen::Index rank = 0;
		for (Eigen::Index c = 0; c < p; ++c) {
			const auto r = normalized_rank(x.leftCols(c + 1));
			if (r == rank) {
				collinear.push_back(static_cast<std::size_t>(c) < column_names.size()
				                        ? column_names[static_cast<std::size_t>(c)]
				                        : fmt::format("column_{}", c));
			}
			rank = r;
		}
		throw RankDeficientDesign(fmt::format("rank-deficient design; collinear columns: {}", fmt::join(collinear, ", ")),
		                          collinear);
	}
	Eigen::VectorXd scale(p);
	for (Eigen::Index c = 0; c < p; ++c) {
		scale(c) = x.col(c).norm();
		x.col(c) /= scale(c);
	}
	const Eigen::Map<const Eigen::VectorXd> y(target.data(), static_cast<Eigen::Index>(target.size()));
	const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(y);
	std::vector<double> out(static_cast<std::size_t>(p));
	for (Eigen::Index c = 0; c < p; ++c) {
		out[static_cast<std::size_t>(c)] = beta(c) / scale(c);
	}
	return out;
}

ForecastModel fit_linear(const FeatureFrame &frame) {
	FeatureSchema schema;
	schema.weather = frame.weather_names;
	schema.uses_lag24 = !frame.lag24_power.empty();
	schema.dummies = frame.dummy_names;
	return fit_ols_model(ModelKind::Linear, frame, std::move(schema));
}

ForecastModel fit_no_weather(const FeatureFrame &frame) {
	if (!frame.weather_names.empty()) {
		throw std::invalid_argument(
		    fmt::format("fit_no_weather: frame carries weather columns ({})", fmt::join(frame.weather_names, ", ")));
	}
	FeatureSchema schema;
	schema.uses_lag24 = !frame.lag24_power.empty();
	schema.dummies = frame.dummy_names;
	return fit_ols_model(ModelKind::NoWeather, frame, std::move(schema));
}

ForecastModel fit_fourier_linear(const FeatureFrame &frame) {
	frame.validate(true);
	const auto speed_it = std::find(frame.weather_names.begin(), frame.weather_names.end(), "wind_speed");
	if (speed_it == frame.weather_names.end()) {
		throw std::invalid_argument("fit_fourier_linear: frame has no 'wind_speed' column");
	}
	const auto speed_col = static_cast<std::size_t>(speed_it - frame.weather_names.begin());
	const auto n = frame.rows();

	// Harmonic terms are kept only when they add rank over the intercept and the kept harmonics.
	std::vector<std::string> harmonics;
	{
		Eigen::MatrixXd h(n, 5);
		h.col(0).setOnes();
		Eigen::Index cols = 1;
		Eigen::Index rank = 1;
		for (const auto *name : {"cos1", "sin1", "cos2", "sin2"}) {
			for (std::size_t r = 0; r < n; ++r) {
				h(static_cast<Eigen::Index>(r), cols) = harmonic_value(name, hour_of(frame.times[r]));
			}
			const auto trial = normalized_rank(h.leftCols(cols + 1));
			if (trial > rank) {
				rank = trial;
				++cols;
				harmonics.emplace_back(name);
			}
		}
	}

	std::vector<std::string> names{"intercept", "speed", "speed^2", "speed^3"};
	names.insert(names.end(), harmonics.begin(), harmonics.end());
	Matrix design(n, names.size());
	for (std::size_t r = 0; r < n; ++r) {
		const double s = frame.weather(r, speed_col);
		design(r, 0) = 1.0;
		design(r, 1) = s;
		design(r, 2) = s * s;
		design(r, 3) = s * s * s;
		for (std::size_t j = 0; j < harmonics.size(); ++j) {
			design(r, 4 + j) = harmonic_value(harmonics[j], hour_of(frame.times[r]));
		}
	}
	if (n < names.size() + 1) {
		throw std::invalid_argument("fit_fourier_linear: too few rows");
	}
	auto coef = least_squares(design, frame.target_power, names);
	FeatureSchema schema;
	schema.weather = {"wind_speed"};
	schema.harmonics = std::move(harmonics);
	return ForecastModel(ModelKind::FourierLinear, 0, std::move(schema), LinearState{std::move(names), std::move(coef)});
}

double ForecastModel::predict_features(std::span<const double> f) const {
	if (const auto *lin = std::get_if<LinearState>(&state_)) {
		if (f.size() + 1 != lin->coefficients.size()) {
			throw std::invalid_argument("predict: feature vector does not match the model schema");
		}
		double y = lin->coefficients[0];
		for (std::size_t i = 0; i < f.size(); ++i) {
			y += lin->coefficients[i + 1] * f[i];
		}
		return y;
	}
	if (const auto *forest = std::get_if<ForestState>(&state_)) {
		if (f.size() != forest->feature_names.size()) {
			throw std::invalid_argument("predict: feature vector does not match the model schema");
		}
		double sum = 0.0;
		for (const auto &tree : forest->trees) {
			sum += tree.predict(f);
		}
		return sum / static_cast<double>(forest->trees.size());
	}
	const auto &mlp = std::get<MlpModel>(state_);
	if (f.size() != mlp.layout.inputs) {
		throw std::invalid_argument("predict: feature vector does not match the model schema");
	}
	return mlp.predict(f);
}

std::vector<double> feature_vector(const ForecastModel &model, std::span<const std::string> weather_names,
                                   std::span<const double> weather_row, const SharedInputs &shared) {
	const auto &schema = model.schema();
	if (weather_row.size() != weather_names.size()) {
		throw std::invalid_argument("predict: weather row and names differ in length");
	}
	std::vector<double> weather;
	weather.reserve(schema.weather.size());
	for (const auto &name : schema.weather) {
		const auto it = std::find(weather_names.begin(), weather_names.end(), name);
		if (it == weather_names.end()) {
			throw std::invalid_argument("predict: input lacks weather feature '" + name + "'");
		}
		weather.push_back(weather_row[static_cast<std::size_t>(it - weather_names.begin())]);
	}
	if (shared.dummies.size() != schema.dummies.size()) {
		throw std::invalid_argument(fmt::format("predict: expected {} dummies, got {}", schema.dummies.size(),
		                                        shared.dummies.size()));
	}

	std::vector<double> f;
	if (model.kind() == ModelKind::FourierLinear) {
		const double s = weather[0];
		f = {s, s * s, s * s * s};
		for (const auto &h : schema.harmonics) {
			f.push_back(harmonic_value(h, shared.hour_of_day));
		}
		return f;
	}
	f = std::move(weather);
	if (schema.uses_lag24) {
		f.push_back(shared.lag24_power);
	}
	f.insert(f.end(), shared.dummies.begin(), shared.dummies.end());
	return f;
}

double predict(const ForecastModel &model, std::span<const std::string> weather_names,
               std::span<const double> weather_row, const SharedInputs &shared) {
	return model.predict_features(feature_vector(model, weather_names, weather_row, shared));
}

std::vector<double> predict_ensemble(const ForecastModel &model, std::span<const std::string> weather_names,
                                     const Matrix &weather_members, const SharedInputs &shared) {
	if (weather_members.rows() == 0) {
		throw std::invalid_argument("predict_ensemble: no members");
	}
	if (weather_members.cols() != weather_names.size()) {
		throw std::invalid_argument("predict_ensemble: member columns do not match weather names");
	}
	std::vector<double> out(weather_members.rows());
	for (std::size_t i = 0; i < weather_members.rows(); ++i) {
		out[i] = predict(model, weather_names, weather_members.row(i), shared);
	}
	return out;
}

void write_model_summary(const ForecastModel &model, std::ostream &out) {
	const auto kind = to_string(model.kind());
	if (const auto *lin = std::get_if<LinearState>(&model.state())) {
		for (std::size_t i = 0; i < lin->names.size(); ++i) {
			out << fmt::format("{},{},{},{}\n", kind, model.horizon_h(), lin->names[i], lin->coefficients[i]);
		}
	} else if (const auto *forest = std::get_if<ForestState>(&model.state())) {
		for (std::size_t i = 0; i < forest->feature_names.size(); ++i) {
			out << fmt::format("{},{},splits:{},{}\n", kind, model.horizon_h(), forest->feature_names[i],
			                   forest->split_counts[i]);
		}
	} else {
		const auto &mlp = std::get<MlpModel>(model.state());
		out << fmt::format("{},{},parameters,{}\n", kind, model.horizon_h(), mlp.weights.size());
		out << fmt::format("{},{},epochs,{}\n", kind, model.horizon_h(), mlp.epochs);
	}
}

} // namespace windcal
