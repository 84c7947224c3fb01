#include <CLI11.hpp>

#include <cstdio>

#include "magwell/benchlib.hpp"

using namespace magwell;

int main(int argc, char** argv) {
  CLI::App app{"magwell: magnetic guiding-center and spectral laboratory"};
  std::string experiment, config_path, out_dir = "out";
  long long seed = -1;
  app.add_option("experiment", experiment,
                 "trajectory | compare-flows | birkhoff | spectrum | counting | report")
      ->required();
  app.add_option("--config", config_path, "config file (key = value lines)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seed", seed, "random seed override");
  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg =
        config_path.empty() ? Config::defaults_for(experiment) : Config::parse_file(config_path);
    if (!cfg.has("experiment")) cfg.set("experiment", experiment);
    if (cfg.get("experiment") != experiment)
      throw ConfigError("config experiment does not match the subcommand");
    if (seed >= 0) cfg.set("seed", std::to_string(seed));

    ExperimentOutput out;
    if (experiment == "trajectory")
      out = run_trajectory(cfg, out_dir);
    else if (experiment == "compare-flows")
      out = run_compare_flows(cfg, out_dir);
    else if (experiment == "birkhoff")
      out = run_birkhoff(cfg, out_dir);
    else if (experiment == "spectrum")
      out = run_spectrum(cfg, out_dir);
    else if (experiment == "counting")
      out = run_counting(cfg, out_dir);
    else if (experiment == "report")
      out = run_report(cfg, out_dir);
    else
      throw ConfigError("unknown experiment: " + experiment);

    for (const auto& f : out.files_written) std::printf("wrote %s\n", f.c_str());
    if (!out.summary.empty()) std::printf("%s\n", out.summary.c_str());
    return out.exit_code;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  }
}
