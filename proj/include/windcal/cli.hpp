#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>

#include "windcal/dataio.hpp"
#include "windcal/strategies.hpp"

namespace windcal::cli {

/// Invalid configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

enum class DatasetSource { Synthetic, Csv };

struct RunConfig {
	DatasetSource source = DatasetSource::Synthetic;
	std::filesystem::path dataset_path;
	SyntheticSpec synthetic;
	ExperimentConfig experiment;
	std::filesystem::path output_dir = "windcal_out";
	bool plots = false;
};

/**
 * Parses an INI experiment file. Sections and keys:
 *
 *   [dataset]     source = synthetic | csv, path = <bundle dir>
 *   [synthetic]   days, train_days, members, horizons, start, dispersion, spread_growth,
 *                 bias_<variable>, spread_<variable>, mean_u, mean_v, wind_component_sd,
 *                 capacity_mw, cut_in, rated, cut_out, noise
 *   [experiment]  seed (required), strategies, models, horizons, power_distribution,
 *                 wind_speed_distribution, window_days, sample_count, pit_bins, n_trees, jobs, crpss
 *   [output]      dir, plots
 *
 * Lists are comma separated. Unknown sections or keys are errors. Relative paths resolve against
 * the directory holding the config file.
 */
RunConfig parse_config(const std::filesystem::path &path);
RunConfig parse_config_text(const std::string &text, const std::filesystem::path &base_dir = {});

/// Loads or generates the dataset described by `config`.
DatasetBundle load_dataset(const RunConfig &config);

/// Writes scores.csv, crps_detail.csv, crpss.csv, histograms.csv, params.csv, models.csv and,
/// when `plots` is set, SVG charts.
void write_outputs(const ExperimentResult &result, const std::filesystem::path &dir, bool plots);

struct Overrides {
	std::optional<std::size_t> jobs;
	std::optional<std::filesystem::path> output_dir;
	bool plots = false;
};

int cmd_run(const std::filesystem::path &config_path, const Overrides &overrides, std::ostream &out,
            std::ostream &err);
int cmd_validate(const std::filesystem::path &config_path, std::ostream &out, std::ostream &err);
int cmd_diagnose(const std::filesystem::path &bundle_path, const std::optional<std::filesystem::path> &output_dir,
                 std::ostream &out, std::ostream &err);
/// Writes a synthetic bundle as CSV, for use with source = csv.
int cmd_synth(const std::filesystem::path &config_path, const std::filesystem::path &bundle_dir, std::ostream &out,
              std::ostream &err);

} // namespace windcal::cli
