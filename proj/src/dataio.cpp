#include "windcal/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <fmt/os.h>

namespace windcal {

const std::vector<std::string> &weather_variables() {
	static const std::vector<std::string> names{variables::kWindSpeed, variables::kU10, variables::kV10,
	                                            variables::kTemperature, variables::kPressure};
	return names;
}

std::optional<double> TimeSeries::at(Timestamp t) const {
	const auto it = std::lower_bound(times.begin(), times.end(), t);
	if (it == times.end() || *it != t) {
		return std::nullopt;
	}
	return values[static_cast<std::size_t>(it - times.begin())];
}

std::vector<int> DatasetBundle::horizons() const {
	std::set<int> hs;
	for (const auto &[var, by_h] : weather_ensembles) {
		for (const auto &[h, series] : by_h) {
			hs.insert(h);
		}
	}
	return {hs.begin(), hs.end()};
}

std::size_t DatasetBundle::member_count() const {
	for (const auto &[var, by_h] : weather_ensembles) {
		for (const auto &[h, series] : by_h) {
			return series.member_count();
		}
	}
	return 0;
}

void DatasetBundle::validate() const {
	std::optional<std::size_t> m;
	for (const auto &[var, by_h] : weather_ensembles) {
		for (const auto &[h, series] : by_h) {
			if (series.variable() != var || series.horizon_h() != h) {
				throw std::invalid_argument(fmt::format("bundle: series keyed {} h{} is labelled {} h{}", var, h,
				                                        series.variable(), series.horizon_h()));
			}
			if (m && *m != series.member_count() && series.size() > 0) {
				throw std::invalid_argument(fmt::format("bundle: {} h{} has {} members, expected {}", var, h,
				                                        series.member_count(), *m));
			}
			if (series.size() > 0) {
				m = series.member_count();
			}
		}
	}
	auto check_monotone = [](const TimeSeries &ts, const std::string &name) {
		if (ts.times.size() != ts.values.size()) {
			throw std::invalid_argument("bundle: " + name + " times and values differ in length");
		}
		for (std::size_t i = 1; i < ts.times.size(); ++i) {
			if (ts.times[i] <= ts.times[i - 1]) {
				throw std::invalid_argument("bundle: " + name + " not strictly increasing at " +
				                            format_iso8601(ts.times[i]));
			}
		}
	};
	check_monotone(power_observed, "power");
	for (const auto &[var, ts] : weather_observed) {
		check_monotone(ts, "observed " + var);
	}
	if (metadata.capacity_mw) {
		const double cap = *metadata.capacity_mw;
		for (std::size_t i = 0; i < power_observed.size(); ++i) {
			const auto &v = power_observed.values[i];
			if (v && (*v < 0.0 || *v > 1.05 * cap)) {
				throw std::invalid_argument(fmt::format("bundle: power {} at {} outside [0, 1.05 * capacity]", *v,
				                                        format_iso8601(power_observed.times[i])));
			}
		}
	}
	if (metadata.resolution_h <= 0) {
		throw std::invalid_argument("bundle: resolution_h must be positive");
	}
}

// ---------------------------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
	std::vector<std::string_view> cells;
	std::size_t start = 0;
	while (true) {
		const auto pos = line.find(',', start);
		if (pos == std::string_view::npos) {
			cells.push_back(line.substr(start));
			break;
		}
		cells.push_back(line.substr(start, pos - start));
		start = pos + 1;
	}
	for (auto &c : cells) {
		while (!c.empty() && (c.front() == ' ' || c.front() == '\t')) {
			c.remove_prefix(1);
		}
		while (!c.empty() && (c.back() == ' ' || c.back() == '\t' || c.back() == '\r')) {
			c.remove_suffix(1);
		}
	}
	return cells;
}

struct CsvTable {
	std::vector<std::string> header;
	struct Row {
		std::size_t line;
		std::vector<std::string> cells;
	};
	std::vector<Row> rows;
};

CsvTable read_csv(const std::filesystem::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw ParseError("cannot open " + path.string());
	}
	CsvTable table;
	std::string line;
	std::size_t line_no = 0;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty() || line == "\r") {
			continue;
		}
		const auto cells = split_csv(line);
		if (table.header.empty()) {
			for (const auto c : cells) {
				table.header.emplace_back(c);
			}
			continue;
		}
		if (cells.size() != table.header.size()) {
			throw ParseError(fmt::format("{}:{}: expected {} cells, found {}", path.string(), line_no,
			                             table.header.size(), cells.size()),
			                 line_no);
		}
		CsvTable::Row row{line_no, {}};
		for (const auto c : cells) {
			row.cells.emplace_back(c);
		}
		table.rows.push_back(std::move(row));
	}
	if (table.header.empty()) {
		throw ParseError(path.string() + ": missing header row");
	}
	return table;
}

std::optional<double> parse_cell(const std::string &cell, const std::filesystem::path &path, std::size_t line) {
	if (cell.empty()) {
		return std::nullopt;
	}
	double v = 0.0;
	const auto *end = cell.data() + cell.size();
	const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
	if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
		throw ParseError(fmt::format("{}:{}: unparseable value '{}'", path.string(), line, cell), line);
	}
	return v;
}

Timestamp parse_time_cell(const std::string &cell, const std::filesystem::path &path, std::size_t line) {
	try {
		return parse_iso8601(cell);
	} catch (const ParseError &e) {
		throw ParseError(fmt::format("{}:{}: {}", path.string(), line, e.what()), line);
	}
}

void check_increasing(const std::vector<Timestamp> &times, const std::vector<std::size_t> &lines,
                      const std::filesystem::path &path) {
	for (std::size_t i = 1; i < times.size(); ++i) {
		if (times[i] == times[i - 1]) {
			throw ParseError(fmt::format("{}:{}: duplicate timestamp {}", path.string(), lines[i],
			                             format_iso8601(times[i])),
			                 lines[i]);
		}
		if (times[i] < times[i - 1]) {
			throw ParseError(fmt::format("{}:{}: timestamp {} is earlier than the previous row", path.string(),
			                             lines[i], format_iso8601(times[i])),
			                 lines[i]);
		}
	}
}

TimeSeries read_value_series(const std::filesystem::path &path, const std::string &value_column) {
	const auto table = read_csv(path);
	if (table.header.size() != 2 || table.header[0] != "time" || table.header[1] != value_column) {
		throw ParseError(fmt::format("{}: header must be 'time,{}'", path.string(), value_column), 1);
	}
	TimeSeries ts;
	std::vector<std::size_t> lines;
	for (const auto &row : table.rows) {
		ts.times.push_back(parse_time_cell(row.cells[0], path, row.line));
		ts.values.push_back(parse_cell(row.cells[1], path, row.line));
		lines.push_back(row.line);
	}
	check_increasing(ts.times, lines, path);
	return ts;
}

EnsembleSeries read_ensemble_file(const std::filesystem::path &path, const std::string &variable, int horizon) {
	const auto table = read_csv(path);
	const auto &h = table.header;
	if (h.size() < 4 || h[0] != "time" || h[1] != "obs") {
		throw ParseError(path.string() + ": header must be 'time,obs,m01,...' with at least two members", 1);
	}
	for (std::size_t i = 2; i < h.size(); ++i) {
		if (h[i] != fmt::format("m{:02d}", i - 1)) {
			throw ParseError(fmt::format("{}: member column {} should be named m{:02d}, found '{}'", path.string(),
			                             i - 1, i - 1, h[i]),
			                 1);
		}
	}
	const std::size_t m = h.size() - 2;
	std::vector<Timestamp> times;
	std::vector<std::size_t> lines;
	std::vector<std::optional<double>> obs;
	Matrix members(table.rows.size(), m);
	for (std::size_t r = 0; r < table.rows.size(); ++r) {
		const auto &row = table.rows[r];
		times.push_back(parse_time_cell(row.cells[0], path, row.line));
		lines.push_back(row.line);
		obs.push_back(parse_cell(row.cells[1], path, row.line));
		for (std::size_t i = 0; i < m; ++i) {
			const auto v = parse_cell(row.cells[2 + i], path, row.line);
			if (!v) {
				throw ParseError(fmt::format("{}:{}: missing ensemble member m{:02d}", path.string(), row.line, i + 1),
				                 row.line);
			}
			members(r, i) = *v;
		}
	}
	check_increasing(times, lines, path);
	return EnsembleSeries(variable, horizon, std::move(times), std::move(members), std::move(obs));
}

std::string format_value(const std::optional<double> &v) {
	return v ? fmt::format("{}", *v) : std::string();
}

} // namespace

DatasetBundle load_csv_bundle(const std::filesystem::path &dir, int schema_version) {
	if (schema_version != 1) {
		throw ParseError(fmt::format("unsupported bundle schema version {}", schema_version));
	}
	if (!std::filesystem::is_directory(dir)) {
		throw ParseError("bundle directory not found: " + dir.string());
	}
	DatasetBundle bundle;
	const std::regex ensemble_name(R"(([a-z0-9_]+)_h(\d+)\.csv)");
	const std::regex observed_name(R"(observed_([a-z0-9_]+)\.csv)");

	std::vector<std::filesystem::path> files;
	for (const auto &entry : std::filesystem::directory_iterator(dir)) {
		if (entry.is_regular_file()) {
			files.push_back(entry.path());
		}
	}
	std::sort(files.begin(), files.end());

	bool has_power = false;
	for (const auto &path : files) {
		const auto name = path.filename().string();
		std::smatch match;
		if (name == "power.csv") {
			bundle.power_observed = read_value_series(path, "power_mw");
			has_power = true;
		} else if (name == "metadata.csv") {
			const auto table = read_csv(path);
			if (table.header.size() != 2 || table.header[0] != "key" || table.header[1] != "value") {
				throw ParseError(path.string() + ": header must be 'key,value'", 1);
			}
			for (const auto &row : table.rows) {
				const auto &key = row.cells[0];
				const auto &value = row.cells[1];
				if (key == "site") {
					bundle.metadata.site = value;
				} else if (key == "capacity_mw") {
					bundle.metadata.capacity_mw = parse_cell(value, path, row.line);
				} else if (key == "test_start") {
					bundle.metadata.test_start = parse_time_cell(value, path, row.line);
				} else if (key == "resolution_h") {
					bundle.metadata.resolution_h = static_cast<int>(parse_cell(value, path, row.line).value_or(3));
				} else {
					throw ParseError(fmt::format("{}:{}: unknown metadata key '{}'", path.string(), row.line, key),
					                 row.line);
				}
			}
		} else if (std::regex_match(name, match, observed_name)) {
			bundle.weather_observed[match[1].str()] = read_value_series(path, "value");
		} else if (std::regex_match(name, match, ensemble_name)) {
			const auto variable = match[1].str();
			const int horizon = std::stoi(match[2].str());
			bundle.weather_ensembles[variable].emplace(horizon, read_ensemble_file(path, variable, horizon));
		}
	}
	if (!has_power && bundle.weather_ensembles.empty()) {
		throw ParseError("bundle directory " + dir.string() + " contains no power.csv or ensemble files");
	}

	// Observed weather falls back to the union of the obs columns across horizons.
	for (const auto &[var, by_h] : bundle.weather_ensembles) {
		if (bundle.weather_observed.count(var)) {
			continue;
		}
		std::map<Timestamp, double> merged;
		for (const auto &[h, series] : by_h) {
			for (std::size_t t = 0; t < series.size(); ++t) {
				const auto &o = series.observations()[t];
				if (!o) {
					continue;
				}
				const auto [it, inserted] = merged.emplace(series.times()[t], *o);
				if (!inserted && it->second != *o) {
					throw ParseError(fmt::format("{}: conflicting observations at {} across horizons", var,
					                             format_iso8601(series.times()[t])));
				}
			}
		}
		TimeSeries ts;
		for (const auto &[t, v] : merged) {
			ts.times.push_back(t);
			ts.values.emplace_back(v);
		}
		bundle.weather_observed[var] = std::move(ts);
	}
	bundle.validate();
	return bundle;
}

void save_csv_bundle(const DatasetBundle &bundle, const std::filesystem::path &dir) {
	std::filesystem::create_directories(dir);
	for (const auto &[var, by_h] : bundle.weather_ensembles) {
		for (const auto &[h, series] : by_h) {
			auto out = fmt::output_file((dir / fmt::format("{}_h{:02d}.csv", var, h)).string());
			std::string header = "time,obs";
			for (std::size_t i = 0; i < series.member_count(); ++i) {
				header += fmt::format(",m{:02d}", i + 1);
			}
			out.print("{}\n", header);
			for (std::size_t t = 0; t < series.size(); ++t) {
				std::string line = format_iso8601(series.times()[t]) + "," + format_value(series.observations()[t]);
				for (const double v : series.row(t)) {
					line += fmt::format(",{}", v);
				}
				out.print("{}\n", line);
			}
		}
	}
	for (const auto &[var, ts] : bundle.weather_observed) {
		auto out = fmt::output_file((dir / ("observed_" + var + ".csv")).string());
		out.print("time,value\n");
		for (std::size_t i = 0; i < ts.size(); ++i) {
			out.print("{},{}\n", format_iso8601(ts.times[i]), format_value(ts.values[i]));
		}
	}
	{
		auto out = fmt::output_file((dir / "power.csv").string());
		out.print("time,power_mw\n");
		for (std::size_t i = 0; i < bundle.power_observed.size(); ++i) {
			out.print("{},{}\n", format_iso8601(bundle.power_observed.times[i]),
			          format_value(bundle.power_observed.values[i]));
		}
	}
	{
		auto out = fmt::output_file((dir / "metadata.csv").string());
		const auto &md = bundle.metadata;
		out.print("key,value\nsite,{}\n", md.site);
		if (md.capacity_mw) {
			out.print("capacity_mw,{}\n", *md.capacity_mw);
		}
		if (md.test_start) {
			out.print("test_start,{}\n", format_iso8601(*md.test_start));
		}
		out.print("resolution_h,{}\n", md.resolution_h);
	}
}

// ---------------------------------------------------------------------------------------------
// Grid aggregation

std::vector<double> weighted_zone_average(const GridField &field) {
	if (field.points.empty()) {
		throw std::invalid_argument("weighted_zone_average: no grid points");
	}
	if (field.values.cols() != field.points.size()) {
		throw std::invalid_argument("weighted_zone_average: value columns do not match points");
	}
	std::set<std::pair<double, double>> seen;
	double total_weight = 0.0;
	for (const auto &p : field.points) {
		if (!(p.weight > 0.0)) {
			throw std::invalid_argument("weighted_zone_average: weights must be positive");
		}
		if (!seen.emplace(p.lat, p.lon).second) {
			throw std::invalid_argument(fmt::format("weighted_zone_average: duplicate point ({}, {})", p.lat, p.lon));
		}
		total_weight += p.weight;
	}
	std::vector<double> out(field.values.rows());
	for (std::size_t t = 0; t < field.values.rows(); ++t) {
		double acc = 0.0;
		for (std::size_t i = 0; i < field.points.size(); ++i) {
			acc += field.points[i].weight * field.values(t, i);
		}
		out[t] = acc / total_weight;
	}
	return out;
}

// ---------------------------------------------------------------------------------------------
// Synthetic scenarios

double synthetic_spread(const SyntheticSpec &spec, const std::string &variable, int horizon_h) {
	static const std::map<std::string, double> defaults{{variables::kWindSpeed, 1.2},
	                                                    {variables::kU10, 1.5},
	                                                    {variables::kV10, 1.5},
	                                                    {variables::kTemperature, 1.0},
	                                                    {variables::kPressure, 150.0}};
	double base = 1.0;
	if (const auto it = spec.spread.find(variable); it != spec.spread.end()) {
		base = it->second;
	} else if (const auto d = defaults.find(variable); d != defaults.end()) {
		base = d->second;
	}
	return base * (1.0 + spec.spread_growth * static_cast<double>(horizon_h) / 24.0);
}

double power_curve(const SyntheticSpec &spec, double speed) {
	if (speed >= spec.cut_out || speed <= spec.cut_in) {
		return 0.0;
	}
	const double r = (speed - spec.cut_in) / (spec.rated - spec.cut_in);
	return spec.capacity_mw * std::clamp(r * r * r, 0.0, 1.0);
}

void validate(const SyntheticSpec &spec) {
	if (!(spec.capacity_mw > 0.0)) {
		throw std::invalid_argument("synthetic: capacity must be positive");
	}
	if (!(spec.cut_in >= 0.0 && spec.cut_in < spec.rated && spec.rated < spec.cut_out)) {
		throw std::invalid_argument("synthetic: need 0 <= cut_in < rated < cut_out");
	}
	if (spec.members < 2) {
		throw std::invalid_argument("synthetic: at least two members are required");
	}
	if (spec.days == 0 || spec.train_days >= spec.days) {
		throw std::invalid_argument("synthetic: need 0 <= train_days < days");
	}
	if (spec.horizons.empty()) {
		throw std::invalid_argument("synthetic: no horizons");
	}
	for (const int h : spec.horizons) {
		if (h <= 0 || h > 24 || h % 3 != 0) {
			throw std::invalid_argument(fmt::format("synthetic: horizon {} h is not a multiple of 3 in (0, 24]", h));
		}
	}
	if (!(spec.dispersion > 0.0) || spec.noise < 0.0 || spec.wind_component_sd <= 0.0) {
		throw std::invalid_argument("synthetic: dispersion and component sd must be positive, noise >= 0");
	}
	for (const auto &[var, b] : spec.bias) {
		const auto &names = weather_variables();
		if (std::find(names.begin(), names.end(), var) == names.end()) {
			throw std::invalid_argument("synthetic: bias for unknown variable '" + var + "'");
		}
	}
}

DatasetBundle generate_synthetic(const SyntheticSpec &spec, std::uint64_t seed) {
	validate(spec);
	constexpr int step_h = 3;
	constexpr Timestamp step = step_h * kSecondsPerHour;
	const Timestamp first = spec.start - kSecondsPerDay; // one lead-in day for the 24 h lag
	const std::size_t steps = (spec.days + 2) * 24 / step_h;

	std::mt19937_64 rng(derive_seed(seed, 0x5157));
	std::normal_distribution<double> z(0.0, 1.0);

	// AR(1) with persistence phi per 3 h step and the given stationary sd.
	constexpr double phi = 0.92;
	const double innov = std::sqrt(1.0 - phi * phi);
	double u_state = z(rng), v_state = z(rng), t_state = z(rng), p_state = z(rng);

	DatasetBundle bundle;
	bundle.metadata.site = "synthetic";
	bundle.metadata.capacity_mw = spec.capacity_mw;
	bundle.metadata.test_start = spec.start + static_cast<Timestamp>(spec.train_days) * kSecondsPerDay;
	bundle.metadata.resolution_h = step_h;

	std::map<std::string, TimeSeries> observed;
	for (const auto &var : weather_variables()) {
		observed[var].times.reserve(steps);
	}
	std::normal_distribution<double> power_noise(0.0, spec.noise * spec.capacity_mw);
	for (std::size_t i = 0; i < steps; ++i) {
		const Timestamp t = first + static_cast<Timestamp>(i) * step;
		u_state = phi * u_state + innov * z(rng);
		v_state = phi * v_state + innov * z(rng);
		t_state = phi * t_state + innov * z(rng);
		p_state = phi * p_state + innov * z(rng);
		const double hour = static_cast<double>(t - day_index(t) * kSecondsPerDay) / 3600.0;
		const double doy = static_cast<double>(day_index(t) % 365);
		const double diurnal = std::sin(2.0 * std::numbers::pi * (hour - 9.0) / 24.0);
		const double u = spec.mean_u + 0.6 * diurnal + spec.wind_component_sd * u_state;
		const double v = spec.mean_v + spec.wind_component_sd * v_state;
		const double speed = std::hypot(u, v);
		const double temp = 281.0 - 8.0 * std::cos(2.0 * std::numbers::pi * doy / 365.0) + 3.0 * diurnal +
		                    1.5 * t_state;
		const double pres = 101325.0 + 800.0 * p_state;
		const std::pair<const char *, double> values[] = {{variables::kWindSpeed, speed},
		                                                  {variables::kU10, u},
		                                                  {variables::kV10, v},
		                                                  {variables::kTemperature, temp},
		                                                  {variables::kPressure, pres}};
		for (const auto &[name, value] : values) {
			observed[name].times.push_back(t);
			observed[name].values.emplace_back(value);
		}
		const double p = std::clamp(power_curve(spec, speed) + power_noise(rng), 0.0, spec.capacity_mw);
		bundle.power_observed.times.push_back(t);
		bundle.power_observed.values.emplace_back(p);
	}

	for (const auto &var : weather_variables()) {
		const auto &truth = observed[var];
		const double bias = spec.bias.count(var) ? spec.bias.at(var) : 0.0;
		for (const int h : spec.horizons) {
			std::mt19937_64 erng(derive_seed(seed, hash_string(var), static_cast<std::uint64_t>(h)));
			const double s = synthetic_spread(spec, var, h);
			std::vector<Timestamp> times;
			std::vector<std::optional<double>> obs;
			Matrix members(spec.days, spec.members);
			for (std::size_t d = 0; d < spec.days; ++d) {
				const Timestamp t = spec.start + static_cast<Timestamp>(d) * kSecondsPerDay + h * kSecondsPerHour;
				const double y = *truth.at(t);
				const double centre = y + s * z(erng);
				for (std::size_t m = 0; m < spec.members; ++m) {
					double x = centre + bias + spec.dispersion * s * z(erng);
					if (var == variables::kWindSpeed) {
						x = std::max(x, 0.0);
					}
					members(d, m) = x;
				}
				times.push_back(t);
				obs.emplace_back(y);
			}
			bundle.weather_ensembles[var].emplace(
			    h, EnsembleSeries(var, h, std::move(times), std::move(members), std::move(obs)));
		}
	}
	bundle.weather_observed = std::move(observed);
	bundle.validate();
	return bundle;
}

} // namespace windcal
