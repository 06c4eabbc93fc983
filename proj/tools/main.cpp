// h2sched command line: ingest -> fit -> demand -> train -> schedule -> report.
#include <CLI11.hpp>
#include <cstdint>
#include <iostream>
#include <string>

#include "h2sched/errors.hpp"
#include "h2sched/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"hydrogen refueling scheduler for an electric taxi fleet"};
  app.require_subcommand(1);
  app.fallthrough();  // allow --config/--seed after the subcommand name

  std::string config_path;
  std::int64_t seed = -1;
  app.add_option("--config", config_path, "path to the key = value config file")
      ->required();
  app.add_option("--seed", seed, "override the configured RNG seed");

  bool perfect_forecast = false;
  auto* ingest = app.add_subcommand("ingest", "parse, clean and bucket raw trips");
  auto* fit = app.add_subcommand("fit", "fit the fleet size regression");
  auto* demand = app.add_subcommand("demand", "convert quarters to hydrogen demand");
  auto* train = app.add_subcommand("train", "train the demand forecaster");
  auto* schedule = app.add_subcommand("schedule", "dispatch the electrolyzer");
  schedule->add_flag("--perfect-forecast", perfect_forecast,
                     "feed the actual demand to the policy instead of a forecast");
  auto* report = app.add_subcommand("report", "bundle artifacts for plotting");

  CLI11_PARSE(app, argc, argv);

  h2sched::PipelineConfig cfg;
  try {
    cfg = h2sched::load_config(config_path);
  } catch (const h2sched::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  if (seed >= 0) cfg.seed = std::uint64_t(seed);

  if (ingest->parsed()) return h2sched::cmd_ingest(cfg);
  if (fit->parsed()) return h2sched::cmd_fit(cfg);
  if (demand->parsed()) return h2sched::cmd_demand(cfg);
  if (train->parsed()) return h2sched::cmd_train(cfg);
  if (schedule->parsed()) return h2sched::cmd_schedule(cfg, perfect_forecast);
  if (report->parsed()) return h2sched::cmd_report(cfg);
  return 2;
}
