#include <doctest.h>

#include <cmath>
#include <random>

#include "windcal/emos.hpp"
#include "windcal/scoring.hpp"

using namespace windcal;

namespace {

constexpr Timestamp kDay = kSecondsPerDay;

/// Daily 00 UTC + h ensembles whose members scatter around the truth with the given bias and
/// spread ratio (1 = calibrated).
EnsembleSeries daily_series(std::size_t days, std::size_t m, double bias, double spread_ratio, std::uint64_t seed,
                            int horizon_h = 12) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> z(0.0, 1.0);
	std::vector<Timestamp> times;
	std::vector<std::optional<double>> obs;
	Matrix members(days, m);
	for (std::size_t d = 0; d < days; ++d) {
		times.push_back(static_cast<Timestamp>(d) * kDay + horizon_h * kSecondsPerHour);
		const double truth = 10.0 + 3.0 * z(rng);
		const double centre = truth + z(rng);
		for (std::size_t i = 0; i < m; ++i) {
			members(d, i) = centre + bias + spread_ratio * z(rng);
		}
		obs.emplace_back(truth);
	}
	return EnsembleSeries("wind_speed", horizon_h, std::move(times), std::move(members), std::move(obs));
}

} // namespace

TEST_CASE("ensemble moments") {
	const auto flat = ensemble_moments(std::vector<double>{1, 1, 1});
	CHECK(flat.mean == 1.0);
	CHECK(flat.variance == 0.0);
	const auto two = ensemble_moments(std::vector<double>{0, 2});
	CHECK(two.mean == 1.0);
	CHECK(two.variance == 1.0);
	CHECK_THROWS_AS(ensemble_moments(std::vector<double>{1}), std::invalid_argument);
}

TEST_CASE("series invariants") {
	Matrix m(2, 2);
	CHECK_THROWS_AS(EnsembleSeries("x", 3, {10, 10}, m), std::invalid_argument);
	CHECK_THROWS_AS(EnsembleSeries("x", 3, {10, 5}, m), std::invalid_argument);
	CHECK_THROWS_AS(EnsembleSeries("x", 3, {10}, m), std::invalid_argument);
	CHECK_THROWS_AS(EnsembleSeries("x", 3, {1, 2}, Matrix(2, 1)), std::invalid_argument);
	CHECK_NOTHROW(EnsembleSeries("x", 3, {1, 2}, m, {1.0, std::nullopt}));
}

TEST_CASE("calibrate substitutes into the location and variance equations") {
	EmosParameters p{0, 1, 0, 1, DistKind::Normal};
	const auto d = calibrate(p, std::vector<double>{0, 2});
	CHECK(d.location() == doctest::Approx(1.0));
	CHECK(d.scale() == doctest::Approx(1.0));

	EmosParameters fixed{0, 1, 1, 0, DistKind::Normal};
	CHECK(calibrate(fixed, std::vector<double>{-4, 9, 30}).scale() == doctest::Approx(1.0));

	EmosParameters tn{-5, 1, 1, 0, DistKind::TruncatedNormalAtZero};
	const auto t = calibrate(tn, std::vector<double>{1, 2});
	CHECK(t.kind() == DistKind::TruncatedNormalAtZero);
	CHECK(cdf(t, 0.0) == 0.0);

	EmosParameters degenerate{0, 1, 0, 1, DistKind::Normal};
	CHECK_THROWS_AS(calibrate(degenerate, std::vector<double>{3, 3}), DegenerateScale);
}

TEST_CASE("fit recovers a constant shift") {
	std::mt19937_64 rng(8);
	std::normal_distribution<double> z(0.0, 1.0);
	std::vector<EmosSample> samples;
	for (int i = 0; i < 400; ++i) {
		const double mean = 5.0 + 4.0 * z(rng);
		samples.push_back({mean, 0.0, mean + 2.0 + z(rng)});
	}
	const auto r = fit_detailed(samples, DistKind::Normal);
	CHECK(r.params.a == doctest::Approx(2.0).epsilon(0.05));
	CHECK(std::abs(r.params.b - 1.0) < 0.1);
	CHECK(r.params.c >= 0.0);
	CHECK(r.params.d >= 0.0);
	CHECK(r.final_mean_crps <= r.initial_mean_crps);
	for (std::size_t i = 1; i < r.optimization.accepted_values.size(); ++i) {
		CHECK(r.optimization.accepted_values[i] <= r.optimization.accepted_values[i - 1]);
	}
}

TEST_CASE("fit on calibrated ensembles does not lose to the raw ensemble") {
	const auto s = daily_series(120, 20, 0.0, 1.0, 2);
	const auto p = fit(s, DistKind::Normal);
	double fitted = 0.0, raw = 0.0;
	for (std::size_t t = 0; t < s.size(); ++t) {
		fitted += crps_closed_form(calibrate(p, s.row(t)), *s.observations()[t]);
		raw += sample_crps(s.row(t), *s.observations()[t]);
	}
	CHECK(fitted <= raw);
}

TEST_CASE("fit is invariant under member permutation") {
	const auto s = daily_series(60, 10, 1.0, 0.5, 4);
	Matrix shuffled = s.members();
	std::mt19937_64 rng(3);
	for (std::size_t t = 0; t < shuffled.rows(); ++t) {
		auto row = std::vector<double>(s.row(t).begin(), s.row(t).end());
		std::shuffle(row.begin(), row.end(), rng);
		std::copy(row.begin(), row.end(), shuffled.row(t).begin());
	}
	const EnsembleSeries permuted(s.variable(), s.horizon_h(), s.times(), shuffled, s.observations());
	for (const auto kind : {DistKind::Normal, DistKind::TruncatedNormalAtZero, DistKind::Gamma}) {
		const auto a = fit(s, kind);
		const auto b = fit(permuted, kind);
		CHECK(a.a == b.a);
		CHECK(a.b == b.b);
		CHECK(a.c == b.c);
		CHECK(a.d == b.d);
	}
}

TEST_CASE("fit preconditions") {
	const std::vector<EmosSample> one{{1.0, 1.0, 1.0}};
	CHECK_THROWS_AS(fit_detailed(one, DistKind::Normal), std::invalid_argument);
}

TEST_CASE("gamma and truncated fits keep non-negative variance coefficients") {
	const auto s = daily_series(80, 15, -1.5, 0.6, 9);
	for (const auto kind : {DistKind::TruncatedNormalAtZero, DistKind::Gamma}) {
		const auto p = fit(s, kind);
		CHECK(p.c >= 0.0);
		CHECK(p.d >= 0.0);
		CHECK(p.kind == kind);
	}
}

TEST_CASE("rolling window arithmetic") {
	const auto s = daily_series(100, 10, 0.0, 1.0, 5);
	RollingOptions options;
	options.window_days = 40;
	const auto r = rolling_calibrate(s, DistKind::Normal, options);
	CHECK(r.parameters.size() == 60);
	CHECK(r.steps.size() == 60);
	CHECK(r.steps.front().time == s.times()[40]);

	options.window_days = 0;
	CHECK_THROWS_AS(rolling_calibrate(s, DistKind::Normal, options), std::invalid_argument);
}

TEST_CASE("rolling fit uses exactly the preceding window") {
	const auto s = daily_series(50, 8, 0.5, 1.0, 6);
	RollingOptions options;
	options.window_days = 40;
	const auto r = rolling_calibrate(s, DistKind::Normal, options);
	REQUIRE(r.parameters.size() == 10);
	std::vector<std::size_t> rows(40);
	std::iota(rows.begin(), rows.end(), 3);
	const auto direct = fit(s, rows, DistKind::Normal);
	CHECK(r.parameters[3].a == doctest::Approx(direct.a).epsilon(1e-12));
	CHECK(r.parameters[3].d == doctest::Approx(direct.d).epsilon(1e-12));
}

TEST_CASE("data gaps: partial windows warn, thin windows are skipped") {
	auto base = daily_series(100, 8, 0.0, 1.0, 7);
	auto obs = base.observations();
	for (std::size_t d = 45; d < 50; ++d) {
		obs[d] = std::nullopt; // 5 missing days: windows still hold >= 30 days
	}
	for (std::size_t d = 60; d < 75; ++d) {
		obs[d] = std::nullopt; // 15 missing days: some windows hold < 30 days
	}
	const EnsembleSeries gappy(base.variable(), base.horizon_h(), base.times(), base.members(), obs);
	const auto r = rolling_calibrate(gappy, DistKind::Normal, {});
	CHECK(r.parameters.size() < 60);
	CHECK(!r.warnings.empty());
	bool skipped = false, partial = false;
	for (const auto &w : r.warnings) {
		skipped = skipped || w.find("skipped") != std::string::npos;
		partial = partial || w.find("fitted on") != std::string::npos;
	}
	CHECK(skipped);
	CHECK(partial);
}

TEST_CASE("constant bias: PIT after rolling EMOS is uniform while raw ranks are skewed") {
	const auto s = daily_series(400, 20, 2.5, 1.0, 12);
	auto raw = empty_histogram(HistogramKind::VerificationRank, 21);
	for (std::size_t t = 40; t < s.size(); ++t) {
		accumulate(raw, verification_rank(s.row(t), *s.observations()[t], t));
	}
	const auto r = rolling_calibrate(s, DistKind::Normal, {});
	auto pit = empty_histogram(HistogramKind::Pit, 10);
	for (const auto &step : r.steps) {
		accumulate(pit, pit_value(step.distribution, *s.observations()[step.row]));
	}
	CHECK_FALSE(chi_square_uniform(raw));
	CHECK(chi_square_uniform(pit));
}
