#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "windcal/distributions.hpp"
#include "windcal/scoring.hpp"

using namespace windcal;

TEST_CASE("sample CRPS examples") {
	const std::vector<double> one{3.0};
	CHECK(sample_crps(one, 5.0) == doctest::Approx(2.0));
	const std::vector<double> two{0.0, 2.0};
	CHECK(sample_crps(two, 1.0) == doctest::Approx(0.5));
	CHECK_THROWS_AS(sample_crps(std::vector<double>{}, 1.0), std::invalid_argument);

	const auto draws = sample(PredictiveDistribution::normal(0, 1), 10000, 11);
	CHECK(std::abs(sample_crps(draws, 0.0) - 0.2337) < 0.01);
}

TEST_CASE("sorted sample CRPS equals the double sum") {
	std::mt19937_64 rng(5);
	std::normal_distribution<double> z(0.0, 3.0);
	for (int trial = 0; trial < 50; ++trial) {
		std::vector<double> x(1 + trial % 17);
		for (auto &v : x) {
			v = trial % 4 == 0 ? std::round(z(rng)) : z(rng); // ties included
		}
		const double y = z(rng);
		CHECK(sample_crps(x, y) == doctest::Approx(oracle::sample_crps_bruteforce(x, y)).epsilon(1e-12));
	}
}

TEST_CASE("sample CRPS is permutation invariant and non-negative") {
	std::vector<double> x{4.0, -1.0, 2.5, 2.5, 9.0};
	const double base = sample_crps(x, 1.0);
	std::mt19937_64 rng(1);
	for (int i = 0; i < 10; ++i) {
		std::shuffle(x.begin(), x.end(), rng);
		CHECK(sample_crps(x, 1.0) == doctest::Approx(base).epsilon(1e-14));
		CHECK(sample_crps(x, x[0]) >= 0.0);
	}
}

TEST_CASE("CRPSS") {
	CHECK(crpss(8, 10) == doctest::Approx(0.20));
	CHECK(crpss(10, 10) == doctest::Approx(0.0));
	CHECK(crpss(68.00, 93.33) == doctest::Approx(0.2714).epsilon(1e-4));
	CHECK_THROWS_AS(crpss(1, 0), std::invalid_argument);
	CHECK_THROWS_AS(crpss(1, -2), std::invalid_argument);
}

TEST_CASE("verification rank") {
	const std::vector<double> m{1, 2, 3};
	CHECK(verification_rank(m, 0.5, 1) == 1);
	CHECK(verification_rank(m, 10, 1) == 4);
	CHECK(verification_rank(m, 2.5, 1) == 3);

	const std::vector<double> ties{5, 5, 5};
	auto hist = empty_histogram(HistogramKind::VerificationRank, 4);
	for (std::uint64_t s = 0; s < 8000; ++s) {
		accumulate(hist, verification_rank(ties, 5.0, s));
	}
	CHECK(chi_square_uniform(hist));
	for (const auto c : hist.bins) {
		CHECK(c > 1700);
	}
}

TEST_CASE("PIT values") {
	CHECK(pit_value(PredictiveDistribution::normal(0, 1), 0.0) == doctest::Approx(0.5));
	CHECK(pit_value(PredictiveDistribution::truncated_normal(1, 1), 0.0) == 0.0);

	const auto d = PredictiveDistribution::gamma(3, 1.2);
	const auto ys = sample(d, 10000, 21);
	std::vector<double> pits;
	for (const double y : ys) {
		pits.push_back(pit_value(d, y));
	}
	CHECK(ks_distance(pits, [](double u) { return std::clamp(u, 0.0, 1.0); }) < 0.02);
	const auto hist = build_histogram(pits, HistogramKind::Pit, 20);
	CHECK(chi_square_statistic(hist) < chi_square_critical(19, 0.01));
}

TEST_CASE("histograms") {
	const std::vector<double> ranks{1, 2, 3, 4};
	CHECK(build_histogram(ranks, HistogramKind::VerificationRank, 4).bins == std::vector<std::uint64_t>{1, 1, 1, 1});

	const std::vector<double> high(7, 0.999);
	const auto h = build_histogram(high, HistogramKind::Pit, 10);
	CHECK(h.bins.back() == 7);
	CHECK(h.total == 7);
	CHECK(build_histogram(std::vector<double>{1.0}, HistogramKind::Pit, 10).bins.back() == 1);

	CHECK_THROWS_AS(build_histogram(std::vector<double>{5}, HistogramKind::VerificationRank, 4), std::out_of_range);
	CHECK_THROWS_AS(build_histogram(std::vector<double>{1.2}, HistogramKind::Pit, 10), std::out_of_range);

	const auto merged = merge(h, h);
	CHECK(merged.total == 14);
	CHECK_THROWS(merge(h, build_histogram(ranks, HistogramKind::VerificationRank, 4)));
}

TEST_CASE("chi-square critical values") {
	CHECK(chi_square_critical(19, 0.01) == doctest::Approx(36.1909).epsilon(1e-5));
	CHECK(chi_square_critical(51, 0.01) == doctest::Approx(77.3860).epsilon(1e-5));

	HistogramCounts skewed{HistogramKind::VerificationRank, {500, 10, 10, 10}, 530};
	CHECK_FALSE(chi_square_uniform(skewed));
}

TEST_CASE("report mean is the mean of its values") {
	const auto r = make_report("raw", "linear", 6, ScoringRule::SampleCrps, {1, 2, 3}, {1.0, 2.0, 4.5},
	                           empty_histogram(HistogramKind::Pit, 2));
	CHECK(r.mean_crps == doctest::Approx(7.5 / 3.0));
	CHECK_FALSE(r.crpss_vs_raw.has_value());
}
