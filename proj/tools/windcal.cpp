#include <iostream>

#include <CLI11.hpp>

#include "windcal/cli.hpp"

int main(int argc, char **argv) {
	CLI::App app{"Ensemble post-processing experiments for wind power forecasts"};
	app.require_subcommand(1);

	std::string config_path;
	std::string bundle_path;
	std::string out_dir;
	std::size_t jobs = 0;
	bool plots = false;

	auto *run = app.add_subcommand("run", "Run the experiment grid described by a config file");
	run->add_option("config", config_path, "INI config")->required();
	run->add_option("--jobs", jobs, "Worker threads (overrides experiment.jobs)");
	run->add_option("--out", out_dir, "Output directory (overrides output.dir)");
	run->add_flag("--plots", plots, "Also write SVG charts");

	auto *validate = app.add_subcommand("validate", "Parse and validate a config, print the resolved grid");
	validate->add_option("config", config_path, "INI config")->required();

	auto *diagnose = app.add_subcommand("diagnose", "Distribution fit and raw rank-histogram summary of a bundle");
	diagnose->add_option("bundle", bundle_path, "CSV bundle directory")->required();
	diagnose->add_option("--out", out_dir, "Directory for raw_rank_histograms.csv");

	auto *synth = app.add_subcommand("synth", "Write the synthetic bundle of a config as CSV");
	synth->add_option("config", config_path, "INI config")->required();
	synth->add_option("--out", out_dir, "Bundle directory")->required();

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		const int code = app.exit(e);
		return code == 0 ? 0 : 1;
	}

	using namespace windcal::cli;
	if (*run) {
		Overrides overrides;
		if (jobs > 0 || run->count("--jobs")) {
			overrides.jobs = jobs;
		}
		if (!out_dir.empty()) {
			overrides.output_dir = out_dir;
		}
		overrides.plots = plots;
		return cmd_run(config_path, overrides, std::cout, std::cerr);
	}
	if (*validate) {
		return cmd_validate(config_path, std::cout, std::cerr);
	}
	if (*diagnose) {
		return cmd_diagnose(bundle_path, out_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(out_dir),
		                    std::cout, std::cerr);
	}
	return cmd_synth(config_path, out_dir, std::cout, std::cerr);
}
