#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "windcal/models.hpp"

using namespace windcal;

namespace {

constexpr Timestamp kStart = 1546300800; // 2019-01-01

struct Synthetic {
	std::vector<Timestamp> times;
	Matrix weather;
	std::vector<double> lag;
	std::vector<double> target;
};

/// Rows every `step_h` hours with speed in [0, 20) and two nuisance columns.
Synthetic make_rows(std::size_t n, std::uint64_t seed, int step_h = 24) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> u(0.0, 1.0);
	Synthetic s;
	s.weather = Matrix(n, 3);
	for (std::size_t i = 0; i < n; ++i) {
		s.times.push_back(kStart + static_cast<Timestamp>(i) * step_h * kSecondsPerHour);
		s.weather(i, 0) = 20.0 * u(rng);
		s.weather(i, 1) = u(rng);
		s.weather(i, 2) = u(rng);
		s.lag.push_back(100.0 * u(rng));
	}
	return s;
}

const std::vector<std::string> kNames{"wind_speed", "u10", "temperature"};

double mse(const ForecastModel &m, const FeatureFrame &f) {
	double e = 0.0;
	for (std::size_t r = 0; r < f.rows(); ++r) {
		SharedInputs shared{f.lag24_power.empty() ? 0.0 : f.lag24_power[r],
		                    encode_dummies(m.schema().dummies, f.times[r]), 0.0};
		const double p = predict(m, f.weather_names, f.weather.row(r), shared);
		e += (p - f.target_power[r]) * (p - f.target_power[r]);
	}
	return e / static_cast<double>(f.rows());
}

} // namespace

TEST_CASE("dummy encoding") {
	const std::vector<Timestamp> times{kStart, kStart + 200 * kSecondsPerDay, kStart + 400 * kSecondsPerDay};
	const auto names = candidate_dummy_names(times);
	CHECK(std::find(names.begin(), names.end(), "season_winter") == names.end());
	CHECK(std::find(names.begin(), names.end(), "month_01") == names.end());
	CHECK(std::find(names.begin(), names.end(), "year_2019") == names.end());
	CHECK(std::find(names.begin(), names.end(), "year_2020") != names.end());
	CHECK(dummy_value("month_07", kStart + 200 * kSecondsPerDay) == 1.0);
	CHECK(dummy_value("season_summer", kStart + 200 * kSecondsPerDay) == 1.0);
	CHECK(dummy_value("season_summer", kStart) == 0.0);
	CHECK_THROWS_AS(dummy_value("weekday_3", kStart), std::invalid_argument);

	// A full year of daily rows: 3 seasons + 11 months, one of them dropped as collinear per season.
	auto s = make_rows(366, 1);
	const auto frame = make_feature_frame(s.times, kNames, s.weather, s.lag, s.lag, true);
	CHECK(frame.dummy_names.size() >= 11);
	CHECK(frame.dummy_names.size() <= 14);
	CHECK_NOTHROW(fit_linear(frame));
}

TEST_CASE("linear regression on exact data") {
	auto s = make_rows(200, 2);
	for (std::size_t i = 0; i < 200; ++i) {
		s.target.push_back(2.0 * s.weather(i, 0));
	}
	Matrix zero_other = s.weather;
	for (std::size_t i = 0; i < 200; ++i) {
		zero_other(i, 1) = 0.5 * std::sin(static_cast<double>(i));
		zero_other(i, 2) = 0.5 * std::cos(3.0 * static_cast<double>(i));
	}
	const auto frame = make_feature_frame(s.times, kNames, zero_other, {}, s.target, false);
	const auto m = fit_linear(frame);
	const auto &state = std::get<LinearState>(m.state());
	CHECK(state.names[1] == "wind_speed");
	CHECK(std::abs(state.coefficients[1] - 2.0) < 1e-10);
	CHECK(std::abs(state.coefficients[2]) < 1e-9);

	// affine in each weather feature
	const std::vector<double> row{5.0, 0.2, 0.3};
	const std::vector<double> shifted{6.5, 0.2, 0.3};
	const double delta = predict(m, kNames, shifted, {}) - predict(m, kNames, row, {});
	CHECK(delta == doctest::Approx(2.0 * 1.5).epsilon(1e-9));
}

TEST_CASE("linear regression on pure noise") {
	auto s = make_rows(300, 3);
	std::mt19937_64 rng(3);
	std::normal_distribution<double> z(0.0, 1.0);
	for (std::size_t i = 0; i < 300; ++i) {
		s.target.push_back(z(rng));
	}
	const auto frame = make_feature_frame(s.times, kNames, s.weather, s.lag, s.target, false);
	const auto m = fit_linear(frame);
	double var = 0.0;
	for (const double y : s.target) {
		var += y * y / 300.0;
	}
	const double r2 = 1.0 - mse(m, frame) / var;
	CHECK(r2 < 0.05);
}

TEST_CASE("collinear columns are named") {
	auto s = make_rows(100, 4);
	Matrix dup(100, 2);
	for (std::size_t i = 0; i < 100; ++i) {
		dup(i, 0) = s.weather(i, 0);
		dup(i, 1) = 2.0 * s.weather(i, 0);
		s.target.push_back(1.0);
	}
	const auto frame = make_feature_frame(s.times, {"wind_speed", "u10"}, dup, {}, s.target, false);
	try {
		fit_linear(frame);
		FAIL("expected a rank error");
	} catch (const RankDeficientDesign &e) {
		CHECK(!e.columns().empty());
		CHECK(std::string(e.what()).find("u10") != std::string::npos);
	}

	// a duplicated dummy column
	FeatureFrame with_dummy = make_feature_frame(s.times, {"wind_speed"}, Matrix(100, 1), {}, s.target, false);
	for (std::size_t i = 0; i < 100; ++i) {
		with_dummy.weather(i, 0) = s.weather(i, 0);
	}
	with_dummy.dummy_names = {"month_02", "month_02b"};
	with_dummy.dummies = Matrix(100, 2);
	for (std::size_t i = 0; i < 100; ++i) {
		with_dummy.dummies(i, 0) = with_dummy.dummies(i, 1) = i % 3 == 0 ? 1.0 : 0.0;
	}
	CHECK_THROWS_AS(fit_linear(with_dummy), RankDeficientDesign);
}

TEST_CASE("Fourier-linear exact polynomial and harmonic data") {
	auto s = make_rows(400, 5, 3);
	std::vector<double> cube, harmonic;
	for (std::size_t i = 0; i < 400; ++i) {
		const double sp = s.weather(i, 0);
		cube.push_back(sp * sp * sp);
		const double hour = static_cast<double>((s.times[i] / kSecondsPerHour) % 24);
		harmonic.push_back(std::cos(2.0 * std::numbers::pi * hour / 24.0));
	}
	const auto f1 = make_feature_frame(s.times, kNames, s.weather, {}, cube, false);
	const auto m1 = fit_fourier_linear(f1);
	const auto &c1 = std::get<LinearState>(m1.state()).coefficients;
	CHECK(std::abs(c1[3] - 1.0) < 1e-8);
	CHECK(std::abs(c1[1]) < 1e-6);
	CHECK(std::abs(c1[2]) < 1e-7);

	const auto f2 = make_feature_frame(s.times, kNames, s.weather, {}, harmonic, false);
	const auto m2 = fit_fourier_linear(f2);
	const auto &st = std::get<LinearState>(m2.state());
	REQUIRE(st.names.size() == 8);
	CHECK(st.names[4] == "cos1");
	CHECK(std::abs(st.coefficients[4] - 1.0) < 1e-8);

	// single hour of day: harmonics drop out instead of breaking the fit
	auto daily = make_rows(100, 6, 24);
	const auto f3 = make_feature_frame(daily.times, kNames, daily.weather, {}, std::vector<double>(100, 1.0), false);
	CHECK(fit_fourier_linear(f3).schema().harmonics.empty());

	Matrix constant(100, 1);
	for (std::size_t i = 0; i < 100; ++i) {
		constant(i, 0) = 7.0;
	}
	const auto f4 = make_feature_frame(daily.times, {"wind_speed"}, constant, {}, std::vector<double>(100, 1.0), false);
	CHECK_THROWS_AS(fit_fourier_linear(f4), RankDeficientDesign);
}

TEST_CASE("random forest") {
	auto train = make_rows(600, 7);
	auto test = make_rows(300, 8);
	auto step = [](double s) { return s < 5.0 ? 0.0 : 100.0; };
	for (std::size_t i = 0; i < 600; ++i) {
		train.target.push_back(step(train.weather(i, 0)));
	}
	for (std::size_t i = 0; i < 300; ++i) {
		test.target.push_back(step(test.weather(i, 0)));
	}
	const auto ftrain = make_feature_frame(train.times, kNames, train.weather, train.lag, train.target, false);
	const auto ftest = make_feature_frame(test.times, kNames, test.weather, test.lag, test.target, false);
	const auto forest = fit_random_forest(ftrain, 100, 42);
	const auto linear = fit_linear(ftrain);
	CHECK(mse(forest, ftest) < mse(linear, ftest));

	const auto again = fit_random_forest(ftrain, 100, 42);
	for (std::size_t r = 0; r < 20; ++r) {
		SharedInputs shared{ftest.lag24_power[r], {}, 0.0};
		const double p = predict(forest, kNames, ftest.weather.row(r), shared);
		CHECK(p == predict(again, kNames, ftest.weather.row(r), shared));
		CHECK(p >= 0.0);
		CHECK(p <= 100.0);
	}
	const auto &state = std::get<ForestState>(forest.state());
	CHECK(state.split_counts[0] > state.split_counts[1]);

	auto tiny = make_rows(30, 9);
	const auto ftiny = make_feature_frame(tiny.times, kNames, tiny.weather, {}, std::vector<double>(30, 1.0), false);
	CHECK_THROWS_AS(fit_random_forest(ftiny, 10, 1), std::invalid_argument);
}

TEST_CASE("random forest tolerates irrelevant predictors") {
	auto make = [](std::size_t n, std::uint64_t seed, std::size_t extra) {
		std::mt19937_64 rng(seed);
		std::uniform_real_distribution<double> u(0.0, 1.0);
		std::normal_distribution<double> z(0.0, 1.0);
		std::vector<Timestamp> times;
		std::vector<std::string> names{"wind_speed", "u10", "v10", "temperature", "pressure"};
		for (std::size_t k = 0; k < extra; ++k) {
			names.push_back("noise" + std::to_string(k));
		}
		Matrix w(n, names.size());
		std::vector<double> y;
		for (std::size_t i = 0; i < n; ++i) {
			times.push_back(kStart + static_cast<Timestamp>(i) * kSecondsPerDay);
			for (std::size_t k = 0; k < names.size(); ++k) {
				w(i, k) = u(rng);
			}
			y.push_back(10.0 * std::sin(3.0 * w(i, 0)) + 5.0 * w(i, 1) * w(i, 1) + 4.0 * w(i, 2) - 3.0 * w(i, 3) +
			            2.0 * w(i, 4) * w(i, 0) + z(rng));
		}
		return make_feature_frame(times, names, w, {}, y, false);
	};
	const auto base_train = make(800, 1, 0), base_test = make(400, 2, 0);
	const auto noisy_train = make(800, 1, 2), noisy_test = make(400, 2, 2);
	const double base = mse(fit_random_forest(base_train, 200, 3), base_test);
	const double noisy = mse(fit_random_forest(noisy_train, 200, 3), noisy_test);
	CHECK(noisy <= 1.2 * base);
}

TEST_CASE("MLP gradient matches central differences") {
	std::mt19937_64 rng(10);
	std::normal_distribution<double> z(0.0, 1.0);
	MlpLayout layout{4, 10, 7};
	Matrix x(30, 4);
	std::vector<double> y(30);
	for (std::size_t r = 0; r < 30; ++r) {
		for (std::size_t c = 0; c < 4; ++c) {
			x(r, c) = z(rng);
		}
		y[r] = z(rng);
	}
	for (int point = 0; point < 10; ++point) {
		std::vector<double> w(layout.parameter_count());
		for (auto &v : w) {
			v = 0.5 * z(rng);
		}
		std::vector<double> grad(w.size());
		mlp_loss(layout, w, x, y, grad);
		double worst = 0.0;
		for (std::size_t i = 0; i < w.size(); ++i) {
			const double h = 1e-6 * (1.0 + std::abs(w[i]));
			auto wp = w, wm = w;
			wp[i] += h;
			wm[i] -= h;
			const double fd = (mlp_loss(layout, wp, x, y, {}) - mlp_loss(layout, wm, x, y, {})) / (2.0 * h);
			worst = std::max(worst, std::abs(fd - grad[i]) / std::max(1e-3, std::abs(grad[i]) + std::abs(fd)));
		}
		CHECK(worst < 1e-4);
	}
}

TEST_CASE("MLP learns a linear target and is deterministic") {
	std::mt19937_64 rng(11);
	std::uniform_real_distribution<double> u(0.0, 20.0);
	const std::size_t n = 5000;
	std::vector<Timestamp> times;
	Matrix w(n, 1);
	std::vector<double> y;
	for (std::size_t i = 0; i < n; ++i) {
		times.push_back(kStart + static_cast<Timestamp>(i) * 3 * kSecondsPerHour);
		w(i, 0) = u(rng);
		y.push_back(3.0 * w(i, 0) + 1.0);
	}
	const auto frame = make_feature_frame(times, {"wind_speed"}, w, {}, y, false);
	MlpOptions fast;
	fast.max_epochs = 400;
	const auto m = fit_mlp(frame, 5, fast);
	double se = 0.0, var = 0.0, mean = 0.0;
	for (const double v : y) {
		mean += v / static_cast<double>(n);
	}
	for (std::size_t i = 0; i < 500; ++i) {
		const double s = u(rng);
		const double p = predict(m, std::vector<std::string>{"wind_speed"}, std::vector<double>{s}, {});
		se += (p - (3.0 * s + 1.0)) * (p - (3.0 * s + 1.0)) / 500.0;
	}
	for (const double v : y) {
		var += (v - mean) * (v - mean) / static_cast<double>(n);
	}
	CHECK(std::sqrt(se) < 0.05 * std::sqrt(var));
	const auto again = fit_mlp(frame, 5, fast);
	CHECK(std::get<MlpModel>(m.state()).weights == std::get<MlpModel>(again.state()).weights);
}

TEST_CASE("ensemble prediction") {
	auto s = make_rows(120, 12);
	for (std::size_t i = 0; i < 120; ++i) {
		s.target.push_back(3.0 * s.weather(i, 0) + 0.5 * s.lag[i] + s.weather(i, 2));
	}
	const auto frame = make_feature_frame(s.times, kNames, s.weather, s.lag, s.target, false);
	const auto m = fit_linear(frame);
	const SharedInputs shared{40.0, {}, 0.0};

	Matrix same(5, 3);
	for (std::size_t i = 0; i < 5; ++i) {
		same(i, 0) = 8.0;
		same(i, 1) = 0.1;
		same(i, 2) = 0.4;
	}
	const auto p = predict_ensemble(m, kNames, same, shared);
	CHECK(std::all_of(p.begin(), p.end(), [&](double v) { return v == p[0]; }));

	Matrix members(4, 3);
	for (std::size_t i = 0; i < 4; ++i) {
		members(i, 0) = 2.0 + static_cast<double>(i);
		members(i, 1) = 0.3;
		members(i, 2) = 0.1 * static_cast<double>(i);
	}
	const auto base = predict_ensemble(m, kNames, members, shared);
	Matrix permuted(4, 3);
	const std::size_t order[] = {2, 0, 3, 1};
	for (std::size_t i = 0; i < 4; ++i) {
		for (std::size_t k = 0; k < 3; ++k) {
			permuted(i, k) = members(order[i], k);
		}
	}
	const auto perm = predict_ensemble(m, kNames, permuted, shared);
	for (std::size_t i = 0; i < 4; ++i) {
		CHECK(perm[i] == base[order[i]]);
	}
	Matrix single(1, 3);
	for (std::size_t k = 0; k < 3; ++k) {
		single(0, k) = members(2, k);
	}
	CHECK(predict_ensemble(m, kNames, single, shared)[0] == predict(m, kNames, single.row(0), shared));

	// weather columns matched by name, in any order
	const std::vector<std::string> reordered{"temperature", "wind_speed", "u10"};
	const std::vector<double> row{0.4, 8.0, 0.1};
	CHECK(predict(m, reordered, row, shared) == doctest::Approx(p[0]));
	CHECK_THROWS_AS(predict(m, std::vector<std::string>{"wind_speed"}, std::vector<double>{1.0}, shared),
	                std::invalid_argument);
}

TEST_CASE("no-weather model") {
	auto s = make_rows(200, 13);
	const auto frame = make_feature_frame(s.times, {}, Matrix(), s.lag, s.lag, false);
	const auto m = fit_no_weather(frame);
	const auto &st = std::get<LinearState>(m.state());
	CHECK(std::abs(st.coefficients[1] - 1.0) < 1e-10);

	const auto with_dummies = make_feature_frame(s.times, {}, Matrix(), {}, s.lag, true);
	CHECK_NOTHROW(fit_no_weather(with_dummies));

	const auto weather_frame = make_feature_frame(s.times, kNames, s.weather, s.lag, s.lag, false);
	CHECK_THROWS_AS(fit_no_weather(weather_frame), std::invalid_argument);
}

TEST_CASE("model summary lists every term") {
	auto s = make_rows(100, 14);
	const auto frame = make_feature_frame(s.times, kNames, s.weather, s.lag, s.lag, false);
	std::ostringstream out;
	auto m = fit_linear(frame);
	m.set_horizon(6);
	write_model_summary(m, out);
	CHECK(out.str().find("linear,6,intercept,") != std::string::npos);
	CHECK(out.str().find("linear,6,lag24_power,") != std::string::npos);
	for (const auto k : {ModelKind::Linear, ModelKind::FourierLinear, ModelKind::RandomForest, ModelKind::Mlp,
	                     ModelKind::NoWeather}) {
		CHECK(parse_model_kind(to_string(k)) == k);
	}
}
