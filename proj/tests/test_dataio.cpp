#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "windcal/dataio.hpp"
#include "windcal/scoring.hpp"

using namespace windcal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
	fs::path path;
	explicit TempDir(const std::string &name) : path(fs::temp_directory_path() / ("windcal_test_" + name)) {
		fs::remove_all(path);
		fs::create_directories(path);
	}
	~TempDir() { fs::remove_all(path); }
	void write(const std::string &file, const std::string &content) const { std::ofstream(path / file) << content; }
};

void write_fixture(const TempDir &dir) {
	dir.write("wind_speed_h06.csv", "time,obs,m01,m02,m03\n"
	                                "2020-01-01T06:00:00Z,5.0,4.5,5.5,6.0\n"
	                                "2020-01-02T06:00:00Z,,3.0,3.5,4.0\n"
	                                "2020-01-03T06:00:00Z,7.25,7.0,7.5,8.0\n");
	dir.write("power.csv", "time,power_mw\n"
	                       "2020-01-01T06:00:00Z,10\n"
	                       "2020-01-02T06:00:00Z,\n"
	                       "2020-01-03T06:00:00Z,30.5\n");
	dir.write("metadata.csv", "key,value\nsite,fixture\ncapacity_mw,50\ntest_start,2020-01-03\n");
}

HistogramCounts raw_ranks(const EnsembleSeries &s) {
	auto h = empty_histogram(HistogramKind::VerificationRank, s.member_count() + 1);
	for (std::size_t t = 0; t < s.size(); ++t) {
		if (const auto &o = s.observations()[t]) {
			accumulate(h, verification_rank(s.row(t), *o, t));
		}
	}
	return h;
}

} // namespace

TEST_CASE("three-day fixture loads") {
	TempDir dir("fixture");
	write_fixture(dir);
	const auto b = load_csv_bundle(dir.path);
	const auto &s = b.weather_ensembles.at("wind_speed").at(6);
	CHECK(s.size() == 3);
	CHECK(s.member_count() == 3);
	CHECK_FALSE(s.observations()[1].has_value());
	CHECK(*s.observations()[2] == 7.25);
	CHECK(b.power_observed.size() == 3);
	CHECK_FALSE(b.power_observed.values[1].has_value());
	CHECK(b.metadata.site == "fixture");
	CHECK(*b.metadata.capacity_mw == 50.0);
	CHECK(format_date(*b.metadata.test_start) == "2020-01-03");
	// observed weather derived from the obs column
	CHECK(b.weather_observed.at("wind_speed").size() == 2);
	CHECK(b.horizons() == std::vector<int>{6});
}

TEST_CASE("load errors are descriptive") {
	SUBCASE("duplicate timestamp") {
		TempDir dir("dup");
		write_fixture(dir);
		dir.write("power.csv", "time,power_mw\n2020-01-01T06:00:00Z,1\n2020-01-01T06:00:00Z,2\n");
		try {
			load_csv_bundle(dir.path);
			FAIL("expected a parse error");
		} catch (const ParseError &e) {
			CHECK(std::string(e.what()).find("2020-01-01T06:00:00Z") != std::string::npos);
			CHECK(e.line() == 3);
		}
	}
	SUBCASE("member count varies") {
		TempDir dir("members");
		write_fixture(dir);
		dir.write("wind_speed_h06.csv", "time,obs,m01,m02,m03\n2020-01-01T06:00:00Z,5,4,5,6\n"
		                                "2020-01-02T06:00:00Z,5,4,5\n");
		CHECK_THROWS_AS(load_csv_bundle(dir.path), ParseError);
	}
	SUBCASE("non-monotone time") {
		TempDir dir("order");
		write_fixture(dir);
		dir.write("power.csv", "time,power_mw\n2020-01-02T06:00:00Z,1\n2020-01-01T06:00:00Z,2\n");
		CHECK_THROWS_AS(load_csv_bundle(dir.path), ParseError);
	}
	SUBCASE("bad number") {
		TempDir dir("number");
		write_fixture(dir);
		dir.write("power.csv", "time,power_mw\n2020-01-01T06:00:00Z,abc\n");
		CHECK_THROWS_WITH_AS(load_csv_bundle(dir.path), doctest::Contains("abc"), ParseError);
	}
	SUBCASE("empty directory") {
		TempDir dir("empty");
		CHECK_THROWS_AS(load_csv_bundle(dir.path), ParseError);
	}
	SUBCASE("unsupported schema") {
		TempDir dir("schema");
		write_fixture(dir);
		CHECK_THROWS_AS(load_csv_bundle(dir.path, 2), ParseError);
	}
}

TEST_CASE("bundle round trip") {
	SyntheticSpec spec;
	spec.days = 20;
	spec.train_days = 10;
	spec.members = 5;
	spec.horizons = {3, 24};
	const auto original = generate_synthetic(spec, 77);
	TempDir dir("roundtrip");
	save_csv_bundle(original, dir.path);
	const auto loaded = load_csv_bundle(dir.path);
	CHECK(loaded == original);
	TempDir again("roundtrip2");
	save_csv_bundle(loaded, again.path);
	CHECK(load_csv_bundle(again.path) == original);
}

TEST_CASE("weighted zone average") {
	GridField f;
	f.points = {{60.0, 15.0, 1.0}, {61.0, 16.0, 1.0}};
	f.values = Matrix(1, 2);
	f.values(0, 0) = 10.0;
	f.values(0, 1) = 20.0;
	CHECK(weighted_zone_average(f)[0] == doctest::Approx(15.0));
	f.points[0].weight = 2.0;
	CHECK(weighted_zone_average(f)[0] == doctest::Approx(13.333).epsilon(1e-4));

	GridField scaled = f;
	for (auto &p : scaled.points) {
		p.weight *= 7.5;
	}
	CHECK(weighted_zone_average(scaled)[0] == doctest::Approx(weighted_zone_average(f)[0]).epsilon(1e-14));

	GridField swapped;
	swapped.points = {f.points[1], f.points[0]};
	swapped.values = Matrix(1, 2);
	swapped.values(0, 0) = 20.0;
	swapped.values(0, 1) = 10.0;
	CHECK(weighted_zone_average(swapped)[0] == doctest::Approx(weighted_zone_average(f)[0]).epsilon(1e-14));

	GridField single;
	single.points = {{1.0, 2.0, 1.0}};
	single.values = Matrix(2, 1);
	single.values(0, 0) = 4.0;
	single.values(1, 0) = -3.0;
	CHECK(weighted_zone_average(single) == std::vector<double>{4.0, -3.0});

	CHECK_THROWS_AS(weighted_zone_average(GridField{}), std::invalid_argument);
	GridField bad = f;
	bad.points[1].weight = 0.0;
	CHECK_THROWS_AS(weighted_zone_average(bad), std::invalid_argument);
	GridField dup = f;
	dup.points[1] = dup.points[0];
	CHECK_THROWS_AS(weighted_zone_average(dup), std::invalid_argument);
}

TEST_CASE("synthetic scenarios") {
	SyntheticSpec spec;
	spec.days = 400;
	spec.train_days = 100;
	spec.members = 20;
	spec.horizons = {12};

	const auto calibrated = generate_synthetic(spec, 1);
	CHECK(calibrated == generate_synthetic(spec, 1));
	const auto &ws = calibrated.weather_ensembles.at("wind_speed").at(12);
	CHECK(chi_square_uniform(raw_ranks(ws)));
	CHECK(chi_square_uniform(raw_ranks(calibrated.weather_ensembles.at("temperature").at(12))));

	auto biased_spec = spec;
	biased_spec.bias["wind_speed"] = 2.0;
	const auto biased = raw_ranks(generate_synthetic(biased_spec, 1).weather_ensembles.at("wind_speed").at(12));
	CHECK_FALSE(chi_square_uniform(biased));
	std::uint64_t low = 0;
	for (std::size_t b = 0; b < 7; ++b) {
		low += biased.bins[b];
	}
	CHECK(low > biased.total / 2);

	auto narrow_spec = spec;
	narrow_spec.dispersion = 0.5;
	const auto narrow = raw_ranks(generate_synthetic(narrow_spec, 1).weather_ensembles.at("wind_speed").at(12));
	CHECK_FALSE(chi_square_uniform(narrow));
	const double expected = static_cast<double>(narrow.total) / static_cast<double>(narrow.bins.size());
	CHECK(static_cast<double>(narrow.bins.front()) > 2.0 * expected);
	CHECK(static_cast<double>(narrow.bins.back()) > 2.0 * expected);
	CHECK(static_cast<double>(narrow.bins[10]) < expected);

	const auto &power = calibrated.power_observed;
	for (const auto &v : power.values) {
		CHECK(*v >= 0.0);
		CHECK(*v <= spec.capacity_mw);
	}
}

TEST_CASE("synthetic scenario validation") {
	SyntheticSpec bad;
	bad.capacity_mw = -1.0;
	CHECK_THROWS_AS(generate_synthetic(bad, 1), std::invalid_argument);
	SyntheticSpec inverted;
	inverted.cut_in = 14.0;
	CHECK_THROWS_AS(generate_synthetic(inverted, 1), std::invalid_argument);
	SyntheticSpec unknown;
	unknown.bias["humidity"] = 1.0;
	CHECK_THROWS_AS(generate_synthetic(unknown, 1), std::invalid_argument);
}

TEST_CASE("power curve") {
	SyntheticSpec spec;
	CHECK(power_curve(spec, 2.0) == 0.0);
	CHECK(power_curve(spec, 8.0) == doctest::Approx(100.0 * 0.125));
	CHECK(power_curve(spec, 15.0) == 100.0);
	CHECK(power_curve(spec, 26.0) == 0.0);
}

TEST_CASE("timestamps") {
	CHECK(format_iso8601(parse_iso8601("2019-03-05T06:00:00Z")) == "2019-03-05T06:00:00Z");
	CHECK(parse_iso8601("2019-03-05 06:00") == parse_iso8601("2019-03-05T06:00:00"));
	CHECK(parse_iso8601("1970-01-02") == kSecondsPerDay);
	CHECK_THROWS_AS(parse_iso8601("2019-13-01"), ParseError);
	CHECK_THROWS_AS(parse_iso8601("yesterday"), ParseError);
}
