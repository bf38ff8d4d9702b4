#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "lindyn/errors.hpp"
#include "lindyn/experiments.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string output_dir;
  std::string format;
  std::uint64_t seed = 0;
};

void add_common_options(CLI::App* sub, CommonOptions& opts) {
  sub->add_option("--config", opts.config_path,
                  "JSON config file; defaults apply when omitted")
      ->check(CLI::ExistingFile);
  sub->add_option("--seed", opts.seed, "base seed, overrides the config");
  sub->add_option("--out", opts.output_dir,
                  "output directory, overrides the config");
  sub->add_option("--format", opts.format, "artifact format: csv | csv+svg");
}

int run(int argc, char** argv) {
  CLI::App app{"gradient-flow laboratory for layerwise linear models"};
  app.require_subcommand(1);

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "integrate one model family and record its trajectory"},
      {"sweep", "train a grid of networks and map kernel movement"},
      {"collapse", "train to interpolation and report terminal geometry"},
      {"emerge", "skill coverage across time, data, or model width"},
      {"grok", "minibatch training with train/test accuracy timelines"},
      {"validate", "check the integrator against every closed form"},
  };
  CommonOptions opts;
  for (const auto& [name, description] : commands)
    add_common_options(app.add_subcommand(name, description), opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    lindyn::ExperimentConfig cfg =
        opts.config_path.empty()
            ? lindyn::parse_config("{}", command)
            : lindyn::load_config(opts.config_path, command);
    if (sub->count("--seed")) cfg.seed = opts.seed;
    if (sub->count("--out")) cfg.output_dir = opts.output_dir;
    if (sub->count("--format")) {
      if (opts.format == "csv")
        cfg.format = lindyn::OutputFormat::kCsv;
      else if (opts.format == "csv+svg")
        cfg.format = lindyn::OutputFormat::kCsvSvg;
      else
        throw lindyn::ConfigError("--format: expected csv | csv+svg");
    }

    const lindyn::RunResult result = lindyn::run_experiment(cfg);
    std::printf("%s\n", result.summary.c_str());
    for (const auto& artifact : result.artifacts)
      std::printf("wrote %s/%s (fnv1a64 %016llx)\n", cfg.output_dir.c_str(),
                  artifact.name.c_str(),
                  static_cast<unsigned long long>(artifact.hash));
    std::printf("wrote %s/manifest.json\n", cfg.output_dir.c_str());
    return 0;
  } catch (const lindyn::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
