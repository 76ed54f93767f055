#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shadow/cli.hpp"
#include "shadow/errors.hpp"

namespace {

using namespace shadow::cli;

/// Loads the config file (or the defaults) and applies --set overrides.
ExperimentConfig load(const std::string &path, const std::vector<std::string> &overrides,
                      const std::string &json_out, const std::string &csv_out) {
  nlohmann::json tree = nlohmann::json::object();
  if (!path.empty())
    tree = config_to_json(load_config(path));
  for (const std::string &o : overrides)
    apply_override(tree, o);
  ExperimentConfig config = parse_config(tree);
  if (!json_out.empty())
    config.json_path = json_out;
  if (!csv_out.empty())
    config.csv_path = csv_out;
  return config;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Shadowing sensitivity toolkit for chaotic maps"};
  app.require_subcommand(1);

  std::string config_path, json_out, csv_out, axis;
  std::vector<std::string> overrides;
  std::vector<double> values;

  auto add_common = [&](CLI::App *sub) {
    sub->add_option("config", config_path, "JSON experiment config (defaults when omitted)");
    sub->add_option("--set", overrides, "override a config key, e.g. --set K=1000 --set correction.N=3")
        ->take_all();
  };

  CLI::App *run_cmd = app.add_subcommand("run", "run the pipeline and write the report");
  add_common(run_cmd);
  run_cmd->add_option("--json", json_out, "JSON report path (stdout when omitted)");
  run_cmd->add_option("--csv", csv_out, "CSV report path");

  CLI::App *sweep_cmd = app.add_subcommand("sweep", "one run per value of a parameter");
  add_common(sweep_cmd);
  sweep_cmd->add_option("--axis", axis, "K, m, M, segment_len or N")->required();
  sweep_cmd->add_option("--values", values, "values, comma or space separated")->delimiter(',');
  sweep_cmd->add_option("--csv", csv_out, "CSV table path (stdout when omitted)");

  CLI::App *validate_cmd = app.add_subcommand("validate", "run the invariant checks");
  add_common(validate_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  ExperimentConfig config;
  try {
    config = load(config_path, overrides, json_out, csv_out);
  } catch (const shadow::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  }

  if (run_cmd->parsed())
    return run(config, std::cout, std::cerr);
  if (sweep_cmd->parsed())
    return sweep(config, axis, values, std::cout, std::cerr);
  return validate(config, std::cout, std::cerr);
}
