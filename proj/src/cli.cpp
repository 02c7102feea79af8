#include "windcal/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "windcal/scoring.hpp"
#include "windcal/svg.hpp"

namespace windcal::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

std::string trim(std::string_view s) {
	const auto b = s.find_first_not_of(" \t\r\n");
	if (b == std::string_view::npos) {
		return {};
	}
	const auto e = s.find_last_not_of(" \t\r\n");
	return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string &text) {
	std::vector<std::string> out;
	std::stringstream ss(text);
	std::string item;
	while (std::getline(ss, item, ',')) {
		item = trim(item);
		if (!item.empty()) {
			out.push_back(item);
		}
	}
	return out;
}

/// Typed access to one INI section that remembers which keys were consumed.
class Section {
public:
	Section(std::string name, const pt::ptree *tree) : name_(std::move(name)), tree_(tree) {}

	std::optional<std::string> text(const std::string &key) {
		seen_.insert(key);
		if (!tree_) {
			return std::nullopt;
		}
		const auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
		if (!v) {
			return std::nullopt;
		}
		return trim(*v);
	}

	template <typename T>
	std::optional<T> number(const std::string &key) {
		const auto v = text(key);
		if (!v) {
			return std::nullopt;
		}
		std::istringstream in(*v);
		T value{};
		in >> value;
		if (in.fail() || !in.eof()) {
			throw ConfigError(fmt::format("{}.{}: cannot parse '{}'", name_, key, *v));
		}
		if constexpr (std::is_unsigned_v<T>) {
			if (v->front() == '-') {
				throw ConfigError(fmt::format("{}.{}: must not be negative", name_, key));
			}
		}
		return value;
	}

	std::optional<bool> flag(const std::string &key) {
		const auto v = text(key);
		if (!v) {
			return std::nullopt;
		}
		if (*v == "true" || *v == "yes" || *v == "1" || *v == "on") {
			return true;
		}
		if (*v == "false" || *v == "no" || *v == "0" || *v == "off") {
			return false;
		}
		throw ConfigError(fmt::format("{}.{}: expected a boolean, got '{}'", name_, key, *v));
	}

	std::optional<std::vector<int>> int_list(const std::string &key) {
		const auto v = text(key);
		if (!v) {
			return std::nullopt;
		}
		std::vector<int> out;
		for (const auto &item : split_list(*v)) {
			try {
				std::size_t used = 0;
				out.push_back(std::stoi(item, &used));
				if (used != item.size()) {
					throw std::invalid_argument(item);
				}
			} catch (const std::exception &) {
				throw ConfigError(fmt::format("{}.{}: '{}' is not an integer", name_, key, item));
			}
		}
		return out;
	}

	/// Keys of the form <prefix><variable>.
	std::map<std::string, double> prefixed(const std::string &prefix) {
		std::map<std::string, double> out;
		if (!tree_) {
			return out;
		}
		for (const auto &[key, child] : *tree_) {
			if (key.rfind(prefix, 0) == 0) {
				out[key.substr(prefix.size())] = *number<double>(key);
			}
		}
		return out;
	}

	void reject_unknown() const {
		if (!tree_) {
			return;
		}
		for (const auto &[key, child] : *tree_) {
			if (!seen_.count(key)) {
				throw ConfigError(fmt::format("{}.{}: unknown key", name_, key));
			}
		}
	}

private:
	std::string name_;
	const pt::ptree *tree_;
	std::set<std::string> seen_;
};

template <typename T, typename F>
T parse_field(const std::string &field, const std::string &value, F &&parser) {
	try {
		return parser(value);
	} catch (const std::invalid_argument &e) {
		throw ConfigError(fmt::format("{}: {}", field, e.what()));
	}
}

void check_writable(const fs::path &dir) {
	std::error_code ec;
	fs::create_directories(dir, ec);
	if (ec) {
		throw ConfigError(fmt::format("output.dir: cannot create '{}': {}", dir.string(), ec.message()));
	}
	const auto probe = dir / ".windcal_write_test";
	{
		std::ofstream f(probe);
		if (!f) {
			throw ConfigError(fmt::format("output.dir: '{}' is not writable", dir.string()));
		}
	}
	fs::remove(probe, ec);
}

std::string pct(const std::optional<double> &skill) {
	return skill ? fmt::format("{:.2f}", 100.0 * *skill) : std::string();
}

std::ofstream open_output(const fs::path &path) {
	std::ofstream out(path, std::ios::binary);
	if (!out) {
		throw std::runtime_error("cannot write " + path.string());
	}
	return out;
}

void print_grid(const RunConfig &config, std::ostream &out) {
	const auto &e = config.experiment;
	std::vector<std::string> s, m, h;
	for (const auto id : e.strategies) {
		s.emplace_back(to_string(id));
	}
	for (const auto kind : e.models) {
		m.emplace_back(to_string(kind));
	}
	for (const int x : e.horizons) {
		h.push_back(std::to_string(x));
	}
	fmt::print(out, "dataset     {}\n",
	           config.source == DatasetSource::Synthetic ? std::string("synthetic") : config.dataset_path.string());
	fmt::print(out, "strategies  {}\n", fmt::join(s, ", "));
	fmt::print(out, "models      {}\n", fmt::join(m, ", "));
	fmt::print(out, "horizons    {}\n", fmt::join(h, ", "));
	fmt::print(out, "power law   {}, wind speed law {}\n", to_string(e.power_dist_kind), to_string(e.wind_speed_dist_kind));
	fmt::print(out, "window      {} days, pit bins {}, seed {}\n", e.window_days, e.pit_bins, e.seed);
	fmt::print(out, "grid        {} cells\n", s.size() * m.size() * h.size());
}

} // namespace

RunConfig parse_config_text(const std::string &text, const fs::path &base_dir) {
	pt::ptree tree;
	try {
		std::istringstream in(text);
		pt::read_ini(in, tree);
	} catch (const pt::ini_parser_error &e) {
		throw ConfigError(fmt::format("config line {}: {}", e.line(), e.message()));
	}
	static const std::set<std::string> known{"dataset", "synthetic", "experiment", "output"};
	for (const auto &[name, child] : tree) {
		if (!known.count(name)) {
			throw ConfigError(fmt::format("[{}]: unknown section", name));
		}
	}
	auto section = [&](const std::string &name) {
		const auto child = tree.get_child_optional(name);
		return Section(name, child ? &*child : nullptr);
	};
	auto resolve = [&](const fs::path &p) { return p.is_absolute() || base_dir.empty() ? p : base_dir / p; };

	RunConfig config;

	auto dataset = section("dataset");
	const auto source = dataset.text("source").value_or("synthetic");
	if (source == "synthetic") {
		config.source = DatasetSource::Synthetic;
	} else if (source == "csv") {
		config.source = DatasetSource::Csv;
		const auto path = dataset.text("path");
		if (!path) {
			throw ConfigError("dataset.path: required when source = csv");
		}
		config.dataset_path = resolve(*path);
		if (!fs::is_directory(config.dataset_path)) {
			throw ConfigError(fmt::format("dataset.path: '{}' is not a directory", config.dataset_path.string()));
		}
	} else {
		throw ConfigError(fmt::format("dataset.source: unknown source '{}'", source));
	}
	dataset.reject_unknown();

	auto syn = section("synthetic");
	auto &spec = config.synthetic;
	spec.days = syn.number<std::size_t>("days").value_or(spec.days);
	spec.train_days = syn.number<std::size_t>("train_days").value_or(spec.train_days);
	spec.members = syn.number<std::size_t>("members").value_or(spec.members);
	spec.horizons = syn.int_list("horizons").value_or(spec.horizons);
	if (const auto start = syn.text("start")) {
		spec.start = parse_field<Timestamp>("synthetic.start", *start, [](const std::string &v) {
			try {
				return parse_iso8601(v);
			} catch (const std::exception &e) {
				throw std::invalid_argument(e.what());
			}
		});
	}
	spec.dispersion = syn.number<double>("dispersion").value_or(spec.dispersion);
	spec.spread_growth = syn.number<double>("spread_growth").value_or(spec.spread_growth);
	spec.mean_u = syn.number<double>("mean_u").value_or(spec.mean_u);
	spec.mean_v = syn.number<double>("mean_v").value_or(spec.mean_v);
	spec.wind_component_sd = syn.number<double>("wind_component_sd").value_or(spec.wind_component_sd);
	spec.capacity_mw = syn.number<double>("capacity_mw").value_or(spec.capacity_mw);
	spec.cut_in = syn.number<double>("cut_in").value_or(spec.cut_in);
	spec.rated = syn.number<double>("rated").value_or(spec.rated);
	spec.cut_out = syn.number<double>("cut_out").value_or(spec.cut_out);
	spec.noise = syn.number<double>("noise").value_or(spec.noise);
	spec.bias = syn.prefixed("bias_");
	spec.spread = syn.prefixed("spread_");
	spec.spread.erase("growth");
	syn.reject_unknown();
	if (config.source == DatasetSource::Synthetic) {
		try {
			validate(spec);
		} catch (const std::invalid_argument &e) {
			throw ConfigError(e.what());
		}
	}

	auto exp = section("experiment");
	auto &e = config.experiment;
	const auto seed = exp.number<std::uint64_t>("seed");
	if (!seed) {
		throw ConfigError("experiment.seed: required");
	}
	e.seed = *seed;
	if (const auto list = exp.text("strategies")) {
		e.strategies.clear();
		for (const auto &name : split_list(*list)) {
			e.strategies.push_back(parse_field<StrategyId>("experiment.strategies", name, parse_strategy_id));
		}
	}
	if (const auto list = exp.text("models")) {
		e.models.clear();
		for (const auto &name : split_list(*list)) {
			e.models.push_back(parse_field<ModelKind>("experiment.models", name, parse_model_kind));
		}
	}
	e.horizons = exp.int_list("horizons").value_or(
	    config.source == DatasetSource::Synthetic ? spec.horizons : std::vector<int>{});
	if (const auto v = exp.text("power_distribution")) {
		e.power_dist_kind = parse_field<DistKind>("experiment.power_distribution", *v, parse_dist_kind);
	}
	if (const auto v = exp.text("wind_speed_distribution")) {
		e.wind_speed_dist_kind = parse_field<DistKind>("experiment.wind_speed_distribution", *v, parse_dist_kind);
	}
	e.window_days = exp.number<std::size_t>("window_days").value_or(e.window_days);
	e.sample_count = exp.number<std::size_t>("sample_count");
	e.pit_bins = exp.number<std::size_t>("pit_bins").value_or(e.pit_bins);
	e.n_trees = exp.number<std::size_t>("n_trees").value_or(e.n_trees);
	e.jobs = exp.number<std::size_t>("jobs").value_or(e.jobs);
	e.compute_crpss = exp.flag("crpss").value_or(e.compute_crpss);
	exp.reject_unknown();
	if (e.jobs == 0) {
		throw ConfigError("experiment.jobs: must be >= 1");
	}

	auto output = section("output");
	if (const auto dir = output.text("dir")) {
		config.output_dir = resolve(*dir);
	}
	config.plots = output.flag("plots").value_or(false);
	output.reject_unknown();
	return config;
}

RunConfig parse_config(const fs::path &path) {
	std::ifstream in(path);
	if (!in) {
		throw ConfigError(fmt::format("cannot read config '{}'", path.string()));
	}
	std::stringstream buffer;
	buffer << in.rdbuf();
	return parse_config_text(buffer.str(), path.parent_path());
}

DatasetBundle load_dataset(const RunConfig &config) {
	if (config.source == DatasetSource::Csv) {
		auto bundle = load_csv_bundle(config.dataset_path);
		bundle.validate();
		return bundle;
	}
	return generate_synthetic(config.synthetic, config.experiment.seed);
}

void write_outputs(const ExperimentResult &result, const fs::path &dir, bool plots) {
	{
		auto out = open_output(dir / "scores.csv");
		out << "model,strategy,horizon_h,mean_crps,crpss_pct,n\n";
		for (const auto &r : result.reports) {
			fmt::print(out, "{},{},{},{},{},{}\n", r.model_id, r.strategy_id, r.horizon_h, r.mean_crps, pct(r.crpss_vs_raw),
			           r.times.size());
		}
	}
	{
		auto out = open_output(dir / "crps_detail.csv");
		out << "model,strategy,horizon_h,time,crps\n";
		for (const auto &r : result.reports) {
			for (std::size_t i = 0; i < r.times.size(); ++i) {
				fmt::print(out, "{},{},{},{},{}\n", r.model_id, r.strategy_id, r.horizon_h, format_iso8601(r.times[i]),
				           r.crps_values[i]);
			}
		}
	}
	{
		auto out = open_output(dir / "crpss.csv");
		out << "model,strategy,horizon_h,crpss_pct\n";
		for (const auto &r : result.reports) {
			if (r.crpss_vs_raw && r.strategy_id != to_string(StrategyId::Raw)) {
				fmt::print(out, "{},{},{},{}\n", r.model_id, r.strategy_id, r.horizon_h, pct(r.crpss_vs_raw));
			}
		}
	}
	{
		auto out = open_output(dir / "histograms.csv");
		out << "group,variable,horizon_h,stage,kind,bin,count\n";
		for (const auto &h : result.histograms) {
			for (std::size_t b = 0; b < h.histogram.bins.size(); ++b) {
				fmt::print(out, "{},{},{},{},{},{},{}\n", h.group, h.variable, h.horizon_h, h.stage,
				           to_string(h.histogram.kind), b, h.histogram.bins[b]);
			}
		}
	}
	{
		auto out = open_output(dir / "params.csv");
		out << "variable,horizon_h,date,a,b,c,d,kind,converged\n";
		for (const auto &t : result.traces) {
			const auto &p = t.params;
			fmt::print(out, "{},{},{},{},{},{},{},{},{}\n", t.variable, t.horizon_h, format_date(p.fitted_at), p.a, p.b, p.c,
			           p.d, to_string(p.kind), p.converged ? 1 : 0);
		}
	}
	{
		auto out = open_output(dir / "models.csv");
		out << "model,horizon_h,term,value\n";
		for (const auto &m : result.models) {
			write_model_summary(*m, out);
		}
	}
	if (!plots) {
		return;
	}

	// CRPSS against horizon, one chart per model.
	std::map<std::string, std::map<std::string, std::vector<std::pair<double, double>>>> skill;
	for (const auto &r : result.reports) {
		if (r.crpss_vs_raw && r.strategy_id != to_string(StrategyId::Raw)) {
			skill[r.model_id][r.strategy_id].emplace_back(r.horizon_h, 100.0 * *r.crpss_vs_raw);
		}
	}
	for (const auto &[model, series] : skill) {
		std::vector<svg::Series> lines;
		for (const auto &[strategy, points] : series) {
			lines.push_back({std::string(display_name(parse_strategy_id(strategy))), points});
		}
		auto out = open_output(dir / fmt::format("crpss_{}.svg", model));
		out << svg::line_chart("CRPSS vs Raw (" + model + ")", "horizon (h)", "CRPSS (%)", lines);
	}
	for (const auto &h : result.histograms) {
		if (h.variable != "power") {
			continue;
		}
		auto name = fmt::format("hist_{}_h{:02}.svg", h.group, h.horizon_h);
		std::replace(name.begin(), name.end(), '/', '_');
		auto out = open_output(dir / name);
		out << svg::bar_chart(fmt::format("{} {} h ({})", h.group, h.horizon_h, h.stage), h.histogram.bins);
	}
}

int cmd_validate(const fs::path &config_path, std::ostream &out, std::ostream &err) {
	try {
		auto config = parse_config(config_path);
		const auto bundle = load_dataset(config);
		if (config.experiment.horizons.empty()) {
			config.experiment.horizons = bundle.horizons();
		}
		validate(config.experiment, bundle);
		print_grid(config, out);
		return 0;
	} catch (const std::exception &e) {
		fmt::print(err, "error: {}\n", e.what());
		return 1;
	}
}

int cmd_run(const fs::path &config_path, const Overrides &overrides, std::ostream &out, std::ostream &err) {
	RunConfig config;
	DatasetBundle bundle;
	try {
		config = parse_config(config_path);
		if (overrides.jobs) {
			if (*overrides.jobs == 0) {
				throw ConfigError("--jobs: must be >= 1");
			}
			config.experiment.jobs = *overrides.jobs;
		}
		if (overrides.output_dir) {
			config.output_dir = *overrides.output_dir;
		}
		config.plots = config.plots || overrides.plots;
		check_writable(config.output_dir);
		bundle = load_dataset(config);
		if (config.experiment.horizons.empty()) {
			config.experiment.horizons = bundle.horizons();
		}
		validate(config.experiment, bundle);
	} catch (const std::exception &e) {
		fmt::print(err, "error: {}\n", e.what());
		return 1;
	}
	print_grid(config, out);

	const auto result = run_experiment(bundle, config.experiment);
	try {
		write_outputs(result, config.output_dir, config.plots);
	} catch (const std::exception &e) {
		fmt::print(err, "error: {}\n", e.what());
		return 1;
	}

	fmt::print(out, "\n{:<16}{:<14}{:>4}{:>12}{:>10}{:>7}\n", "model", "strategy", "h", "mean_crps", "crpss%", "n");
	for (const auto &r : result.reports) {
		fmt::print(out, "{:<16}{:<14}{:>4}{:>12.4f}{:>10}{:>7}\n", r.model_id, r.strategy_id, r.horizon_h, r.mean_crps,
		           pct(r.crpss_vs_raw), r.times.size());
	}
	if (!result.warnings.empty()) {
		fmt::print(out, "\n{} warnings (first shown): {}\n", result.warnings.size(), result.warnings.front());
	}
	for (const auto &f : result.failures) {
		fmt::print(err, "failed: {} / {} / {} h: {}\n", f.model, f.strategy, f.horizon_h, f.error);
	}
	fmt::print(out, "outputs written to {}\n", config.output_dir.string());
	return result.failures.empty() ? 0 : 2;
}

namespace {

struct Moments {
	double mean = 0.0, sd = 0.0, skew = 0.0, min = 0.0, max = 0.0;
};

Moments moments(const std::vector<double> &v) {
	Moments m;
	const double n = static_cast<double>(v.size());
	for (const double x : v) {
		m.mean += x / n;
	}
	double m2 = 0.0, m3 = 0.0;
	for (const double x : v) {
		m2 += (x - m.mean) * (x - m.mean) / n;
		m3 += std::pow(x - m.mean, 3) / n;
	}
	m.sd = std::sqrt(m2);
	m.skew = m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
	const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
	m.min = *lo;
	m.max = *hi;
	return m;
}

/// Moment-matched candidate laws for a sample.
std::vector<std::pair<std::string, double>> ks_candidates(const std::vector<double> &v, const Moments &m) {
	std::vector<std::pair<std::string, double>> out;
	if (!(m.sd > 0.0)) {
		return out;
	}
	const auto normal = PredictiveDistribution::normal(m.mean, m.sd);
	out.emplace_back("normal", ks_distance(v, [&](double y) { return cdf(normal, y); }));
	if (m.min >= 0.0) {
		const auto tn = PredictiveDistribution::truncated_normal(m.mean, m.sd);
		out.emplace_back("truncated_normal", ks_distance(v, [&](double y) { return cdf(tn, y); }));
		if (m.mean > 0.0) {
			const auto g = PredictiveDistribution::gamma(m.mean, m.sd);
			out.emplace_back("gamma", ks_distance(v, [&](double y) { return cdf(g, y); }));
		}
	}
	return out;
}

} // namespace

int cmd_diagnose(const fs::path &bundle_path, const std::optional<fs::path> &output_dir, std::ostream &out,
                 std::ostream &err) {
	DatasetBundle bundle;
	try {
		bundle = load_csv_bundle(bundle_path);
		if (bundle.empty()) {
			throw std::invalid_argument("bundle '" + bundle_path.string() + "' is empty");
		}
		bundle.validate();
		if (output_dir) {
			check_writable(*output_dir);
		}
	} catch (const std::exception &e) {
		fmt::print(err, "error: {}\n", e.what());
		return 1;
	}

	fmt::print(out, "site {}, {} members, horizons:", bundle.metadata.site, bundle.member_count());
	for (const int h : bundle.horizons()) {
		fmt::print(out, " {}", h);
	}
	fmt::print(out, "\n\n{:<14}{:>7}{:>12}{:>11}{:>8}{:>11}{:>11}   KS distance to moment-matched laws\n", "variable",
	           "n", "mean", "sd", "skew", "min", "max");

	auto summary = [&](const std::string &name, const TimeSeries &series) {
		std::vector<double> v;
		for (const auto &x : series.values) {
			if (x) {
				v.push_back(*x);
			}
		}
		if (v.empty()) {
			return;
		}
		const auto m = moments(v);
		fmt::print(out, "{:<14}{:>7}{:>12.4g}{:>11.4g}{:>8.3f}{:>11.4g}{:>11.4g}  ", name, v.size(), m.mean, m.sd, m.skew,
		           m.min, m.max);
		for (const auto &[law, d] : ks_candidates(v, m)) {
			fmt::print(out, " {}={:.4f}", law, d);
		}
		out << '\n';
	};
	for (const auto &[name, series] : bundle.weather_observed) {
		summary(name, series);
	}
	summary("power", bundle.power_observed);

	std::ofstream csv;
	if (output_dir) {
		csv = open_output(*output_dir / "raw_rank_histograms.csv");
		csv << "variable,horizon_h,bin,count\n";
	}
	fmt::print(out, "\nraw verification ranks (mean normalized rank 0.5 and chi-square pass when calibrated)\n");
	fmt::print(out, "{:<14}{:>4}{:>7}{:>11}{:>11}{:>10}{:>10}  verdict\n", "variable", "h", "n", "mean_rank", "chi2",
	           "crit1%", "outside");
	for (const auto &[var, by_h] : bundle.weather_ensembles) {
		for (const auto &[h, series] : by_h) {
			auto hist = empty_histogram(HistogramKind::VerificationRank, series.member_count() + 1);
			double rank_sum = 0.0;
			for (std::size_t t = 0; t < series.size(); ++t) {
				if (const auto &obs = series.observations()[t]) {
					const int r = verification_rank(series.row(t), *obs, derive_seed(hash_string(var), h, series.times()[t]));
					accumulate(hist, r);
					rank_sum += r;
				}
			}
			if (hist.total == 0) {
				continue;
			}
			const auto m = static_cast<double>(series.member_count());
			const double mean_rank = rank_sum / static_cast<double>(hist.total) / m;
			const double outside =
			    static_cast<double>(hist.bins.front() + hist.bins.back()) / static_cast<double>(hist.total);
			const double chi2 = chi_square_statistic(hist);
			const double crit = chi_square_critical(hist.bins.size() - 1, 0.01);
			std::string verdict = "uniform";
			if (chi2 > crit) {
				if (mean_rank > 0.6) {
					verdict = "skewed: observations above the ensemble (negative bias)";
				} else if (mean_rank < 0.4) {
					verdict = "skewed: observations below the ensemble (positive bias)";
				} else if (outside > 2.0 / (m + 1.0)) {
					verdict = "U-shaped: underdispersed";
				} else {
					verdict = "non-uniform";
				}
			}
			fmt::print(out, "{:<14}{:>4}{:>7}{:>11.3f}{:>11.1f}{:>10.1f}{:>10.3f}  {}\n", var, h, hist.total, mean_rank,
			           chi2, crit, outside, verdict);
			if (csv.is_open()) {
				for (std::size_t b = 0; b < hist.bins.size(); ++b) {
					fmt::print(csv, "{},{},{},{}\n", var, h, b, hist.bins[b]);
				}
			}
		}
	}
	return 0;
}

int cmd_synth(const fs::path &config_path, const fs::path &bundle_dir, std::ostream &out, std::ostream &err) {
	try {
		auto config = parse_config(config_path);
		config.source = DatasetSource::Synthetic;
		validate(config.synthetic);
		const auto bundle = generate_synthetic(config.synthetic, config.experiment.seed);
		fs::create_directories(bundle_dir);
		save_csv_bundle(bundle, bundle_dir);
		fmt::print(out, "wrote synthetic bundle to {}\n", bundle_dir.string());
		return 0;
	} catch (const std::exception &e) {
		fmt::print(err, "error: {}\n", e.what());
		return 1;
	}
}

} // namespace windcal::cli
