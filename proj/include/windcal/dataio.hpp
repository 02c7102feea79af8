#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "windcal/common.hpp"
#include "windcal/emos.hpp"

namespace windcal {

namespace variables {
inline constexpr const char *kWindSpeed = "wind_speed";
inline constexpr const char *kU10 = "u10";
inline constexpr const char *kV10 = "v10";
inline constexpr const char *kTemperature = "temperature";
inline constexpr const char *kPressure = "pressure";
} // namespace variables

/// Model inputs in canonical order.
const std::vector<std::string> &weather_variables();

/// Irregular time series with optional (missing) values.
struct TimeSeries {
	std::vector<Timestamp> times;
	std::vector<std::optional<double>> values;

	std::optional<double> at(Timestamp t) const;
	std::size_t size() const noexcept { return times.size(); }

	friend bool operator==(const TimeSeries &, const TimeSeries &) = default;
};

struct BundleMetadata {
	std::string site = "unnamed";
	std::optional<double> capacity_mw;
	/// First forecast-origin day of the evaluation span; earlier days are training data.
	std::optional<Timestamp> test_start;
	int resolution_h = 3;

	friend bool operator==(const BundleMetadata &, const BundleMetadata &) = default;
};

struct DatasetBundle {
	/// variable -> horizon (h) -> ensembles
	std::map<std::string, std::map<int, EnsembleSeries>> weather_ensembles;
	/// Reanalysis/observed weather per variable.
	std::map<std::string, TimeSeries> weather_observed;
	TimeSeries power_observed;
	BundleMetadata metadata;

	std::vector<int> horizons() const;
	std::size_t member_count() const;
	bool empty() const noexcept { return weather_ensembles.empty() && power_observed.size() == 0; }
	/// Checks cross-series invariants; throws std::invalid_argument.
	void validate() const;

	friend bool operator==(const DatasetBundle &, const DatasetBundle &) = default;
};

/**
 * Reads a bundle directory:
 *   <variable>_h<HH>.csv   time,obs,m01..mMM   (one per variable and horizon)
 *   power.csv              time,power_mw
 *   observed_<variable>.csv time,value        (optional; otherwise derived from the obs columns)
 *   metadata.csv           key,value           (optional: site, capacity_mw, test_start, resolution_h)
 * Empty cells are missing values. Throws ParseError naming the file and line.
 */
DatasetBundle load_csv_bundle(const std::filesystem::path &dir, int schema_version = 1);

/// Writes the layout read by load_csv_bundle, including observed_<variable>.csv files.
void save_csv_bundle(const DatasetBundle &bundle, const std::filesystem::path &dir);

struct GridPoint {
	double lat;
	double lon;
	double weight; // 1 for ordinary points, 2 for high turbine density
};

struct GridField {
	std::vector<GridPoint> points;
	Matrix values; // time x point
};

/// Per-timestep weighted mean sum(w_i v_i) / sum(w_i). Throws std::invalid_argument for empty
/// point sets, non-positive weights or duplicate points.
std::vector<double> weighted_zone_average(const GridField &field);

struct SyntheticSpec {
	std::size_t days = 160;
	std::size_t train_days = 80;
	std::size_t members = 51;
	std::vector<int> horizons = {3, 6, 9, 12, 15, 18, 21, 24};
	Timestamp start = 1546300800; // 2019-01-01T00:00:00Z

	/// Additive ensemble bias per variable, in variable units.
	std::map<std::string, double> bias;
	/// Scales member deviations around the ensemble centre; 1 is calibrated, < 1 underdispersed.
	double dispersion = 1.0;
	/// Ensemble spread per variable; defaults apply for unlisted variables.
	std::map<std::string, double> spread;
	/// Relative spread growth from 0 h to 24 h lead time.
	double spread_growth = 0.5;

	double mean_u = 7.0;
	double mean_v = 2.0;
	double wind_component_sd = 2.5;

	double capacity_mw = 100.0;
	double cut_in = 3.0;
	double rated = 13.0;
	double cut_out = 25.0;
	/// Standard deviation of the power noise as a fraction of capacity.
	double noise = 0.05;
};

/// Ensemble spread for `variable` at horizon `h` under `spec`.
double synthetic_spread(const SyntheticSpec &spec, const std::string &variable, int horizon_h);

/// capacity * clamp(((s - cut_in) / (rated - cut_in))^3, 0, 1), zero at or above cut_out.
double power_curve(const SyntheticSpec &spec, double speed);

/// Throws std::invalid_argument for non-physical scenarios.
void validate(const SyntheticSpec &spec);

/**
 * Synthetic dataset: observed weather from AR(1) processes, ensembles exchangeable with the truth
 * (centre = truth + e, member = centre + bias + dispersion * e_i), power from the cubic curve plus
 * noise clipped to [0, capacity]. Deterministic per seed.
 */
DatasetBundle generate_synthetic(const SyntheticSpec &spec, std::uint64_t seed);

} // namespace windcal
