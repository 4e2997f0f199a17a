// Command-line front end: run / sweep / churn / bounds / gen over a flat
// key-value config file. Exit code 0 on success, 1 with a diagnostic line
// on stderr otherwise.

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "distopt/harness.hpp"

namespace {

distopt::ExperimentConfig load_config(const std::string& path, const std::string& out_dir,
                                      std::int64_t seed_override) {
  distopt::ExperimentConfig cfg = distopt::ExperimentConfig::from_file(path);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
  return cfg;
}

void print_run_result(const distopt::RunResult& result) {
  std::cout << result.summary;
  if (!result.bounds_report.empty()) std::cout << result.bounds_report;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-time distributed optimization simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed_override = -1;
  std::string sweep_param;
  std::string sweep_values_arg;

  auto add_common = [&](CLI::App* cmd, bool config_required = true) {
    cmd->add_option("--config", config_path, "experiment config file")->required(config_required);
    cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    cmd->add_option("--seed", seed_override, "seed (overrides the config seed)");
  };

  CLI::App* cmd_run = app.add_subcommand("run", "integrate every configured algorithm");
  add_common(cmd_run);

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "rerun over a list of parameter values");
  add_common(cmd_sweep);
  cmd_sweep->add_option("--param", sweep_param, "numeric config key (e.g. gains.beta)");
  cmd_sweep->add_option("--values", sweep_values_arg, "comma-separated values");

  CLI::App* cmd_churn = app.add_subcommand("churn", "run with join/leave events from the config");
  add_common(cmd_churn);

  CLI::App* cmd_bounds = app.add_subcommand("bounds", "print the gain-bound report");
  add_common(cmd_bounds);

  CLI::App* cmd_gen = app.add_subcommand("gen", "emit seeded graph/ensemble files");
  add_common(cmd_gen);

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      const auto cfg = load_config(config_path, out_dir, seed_override);
      print_run_result(distopt::run(cfg));
    } else if (cmd_sweep->parsed()) {
      auto cfg = load_config(config_path, out_dir, seed_override);
      const std::string param = sweep_param.empty() ? cfg.sweep_parameter : sweep_param;
      std::vector<double> values = cfg.sweep_values;
      if (!sweep_values_arg.empty()) {
        values.clear();
        std::stringstream ss(sweep_values_arg);
        std::string tok;
        while (std::getline(ss, tok, ',')) values.push_back(std::stod(tok));
      }
      if (param.empty()) throw std::invalid_argument("sweep: no parameter given");
      const auto rows = distopt::sweep(cfg, param, values);
      std::cout << "value,status,rate,r_squared,trusted,final_error\n";
      for (const auto& row : rows) {
        if (row.ok)
          std::cout << distopt::format_g17(row.value) << ",ok," << distopt::format_g17(row.rate)
                    << "," << distopt::format_g17(row.r_squared) << ","
                    << (row.trusted ? "yes" : "no") << "," << distopt::format_g17(row.final_error)
                    << "\n";
        else
          std::cout << distopt::format_g17(row.value) << ",failed: " << row.error << "\n";
      }
    } else if (cmd_churn->parsed()) {
      const auto cfg = load_config(config_path, out_dir, seed_override);
      std::vector<distopt::TimedChurnEvent> events;
      for (const auto& line : cfg.churn_events)
        events.push_back(distopt::parse_churn_event(line, cfg));
      const auto result = distopt::churn_scenario(cfg, events);
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
      for (const auto& seg : result.segments)
        std::cout << "segment [" << seg.t_start << ", " << seg.t_end
                  << "]: agents = " << seg.n_agents << "\n";
      std::cout << "final_error = " << distopt::format_g17(result.final_error) << "\n";
    } else if (cmd_bounds->parsed()) {
      const auto cfg = load_config(config_path, out_dir, seed_override);
      const auto [graph, ensemble] = distopt::build_inputs(cfg);
      const std::string report = distopt::gain_bound_report(cfg, graph, ensemble);
      std::cout << report;
      if (!cfg.out_dir.empty()) {
        std::filesystem::create_directories(cfg.out_dir);
        std::ofstream(cfg.out_dir + "/bounds.txt") << report;
      }
    } else if (cmd_gen->parsed()) {
      const auto cfg = load_config(config_path, out_dir, seed_override);
      distopt::generate_inputs(cfg);
      std::cout << "wrote " << cfg.out_dir << "/graph.txt and " << cfg.out_dir
                << "/ensemble.txt\n";
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
