// chicane CLI: run scenarios, plot episode logs, train the learned
// trajectory connector.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "chicane/plot.hpp"
#include "chicane/scenario.hpp"

namespace {

std::string meta_for(const std::string& pgm_path) {
  size_t dot = pgm_path.find_last_of('.');
  size_t slash = pgm_path.find_last_of('/');
  bool has_ext = dot != std::string::npos &&
                 (slash == std::string::npos || dot > slash);
  return (has_ext ? pgm_path.substr(0, dot) : pgm_path) + ".meta";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deterministic 2d racing stack: scenarios, plots, training"};
  app.require_subcommand(1);

  std::string config_path, log_path, map_path, out_path;
  int64_t seed_override = -1;
  double duration_override = 0.0;

  CLI::App* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("config", config_path, "scenario JSON file")->required();
  run->add_option("--seed", seed_override, "override the config seed");
  run->add_option("--duration", duration_override,
                  "override the run length, seconds");

  CLI::App* plot = app.add_subcommand("plot", "render an episode log to SVG");
  plot->add_option("log", log_path, "episode CSV")->required();
  plot->add_option("map", map_path, "map PGM (metadata: same name, .meta)")
      ->required();
  plot->add_option("out", out_path, "output SVG path")->required();

  CLI::App* train =
      app.add_subcommand("rbf-train", "train and test the learned connector");
  train->add_option("config", config_path, "training JSON file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      chicane::ScenarioConfig cfg = chicane::load_scenario(config_path);
      if (seed_override >= 0)
        cfg.seed = static_cast<uint64_t>(seed_override);
      if (duration_override > 0.0) cfg.duration = duration_override;
      chicane::ExitSummary s = chicane::run_scenario(cfg);
      for (const chicane::VehicleSummary& v : s.vehicles) {
        std::printf("vehicle %d: laps %d, collisions %d, violations %d\n",
                    v.id, v.laps, v.collisions, v.violations);
        for (size_t i = 0; i < v.lap_times.size(); ++i)
          std::printf("  lap %zu: %.3f s\n", i + 1, v.lap_times[i]);
      }
      std::printf("episode: %s\nsummary: %s\n", s.episode_csv.c_str(),
                  s.summary_json.c_str());
    } else if (plot->parsed()) {
      chicane::emit_plot(log_path, map_path, meta_for(map_path), out_path);
      std::printf("plot: %s\n", out_path.c_str());
    } else {
      chicane::RbfTrainConfig cfg = chicane::load_rbf_train(config_path);
      chicane::RbfPipelineResult r = chicane::rbf_pipeline(cfg);
      std::printf(
          "trained %d of %d goals, epsilon %.4g, residual %.2e\n"
          "worst test error %.3e, mean %.3e, %.3g inferences/s\n"
          "dataset: %s\nnetwork: %s\nreport: %s\n",
          r.trained, r.goals, r.epsilon, r.training_residual,
          r.worst_test_error, r.mean_test_error, r.inferences_per_second,
          r.dataset_csv.c_str(), r.network_path.c_str(),
          r.report_path.c_str());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
