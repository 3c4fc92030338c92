#pragma once

// Scenario runner: a JSON config wires map, vehicles, planners, noise,
// monitors and V2V into one closed loop, stepped at fixed dt. Each run
// writes an episode CSV and a summary JSON; with a fixed seed the bytes
// are identical run to run (the seed is the only entropy source, and
// nothing in the loop reads a clock).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chicane/core.hpp"
#include "chicane/ftg.hpp"
#include "chicane/lattice.hpp"
#include "chicane/localize.hpp"
#include "chicane/monitor.hpp"
#include "chicane/pursuit.hpp"
#include "chicane/raycast.hpp"
#include "chicane/sim.hpp"
#include "chicane/v2v.hpp"

namespace chicane {

// Directed finish line: a forward crossing moves from the right side of
// a->b to the left (through the segment itself, not its extension).
struct LapLine {
  Vec2 a;
  Vec2 b;
};

struct PlannerConfig {
  std::string type;       // ftg | pursuit | lattice | rbf | roundabout | constant
  int period = 1;         // planner runs every `period` sim steps
  std::string waypoints;  // csv path; meaning depends on the planner
  bool closed = true;

  FtgConfig ftg;          // ftg (waypoints optional: goal pull toward the path)
  PursuitConfig pursuit;  // pursuit and roundabout

  GoalRegion region;       // lattice / rbf (centerline loaded from waypoints)
  EvalConfig eval;         // lattice / rbf
  BvpOptions bvp;          // lattice
  double control_dt = 0.0;  // lattice / rbf; 0 = period * dt
  std::string network;      // rbf: trained-network file

  ConflictZone zone;  // roundabout
  double hold_margin = 0.8;

  ControlCommand constant;  // constant
};

struct LocalizeConfig {
  bool enabled = false;
  int particles = 1000;
  MclConfig mcl;
  double motion_sigma_xy = 0.0;  // process noise added per planner tick
  double motion_sigma_theta = 0.0;
  std::string init = "gaussian";  // gaussian (around the start pose) | uniform
  double init_sigma_xy = 0.3;
  double init_sigma_theta = 0.2;
};

struct VehicleConfig {
  int id = 0;
  VehicleState start;
  VehicleParams params;
  PlannerConfig planner;
  LocalizeConfig localize;
};

struct V2VConfig {
  bool enabled = false;
  double loss_rate = 0.0;
  double latency = 0.0;
  double staleness_window = 0.5;
};

struct ScenarioConfig {
  std::string map_pgm;
  std::string map_meta;
  double duration = 0.0;
  double dt = 0.02;
  uint64_t seed = 0;
  ScanConfig scan;
  NoiseConfig noise;
  std::vector<MonitorSpec> monitors;
  std::optional<LapLine> lap_line;
  V2VConfig v2v;
  std::vector<VehicleConfig> vehicles;
  std::string episode_csv;   // output paths
  std::string summary_json;
  std::string source_path;  // config file this was loaded from, for the summary
};

// Parse and validate a config document. Unknown keys, wrong types, missing
// required fields, bad planner names and broken invariants (no vehicles,
// duration <= 0, duplicate ids, ...) all throw ConfigError naming the
// offending field path. Relative input paths are resolved against
// `base_dir` (output paths are left as written).
ScenarioConfig parse_scenario(const std::string& json_text,
                              const std::string& base_dir);

// parse_scenario on the file's contents, base_dir = the file's directory.
// Output paths default to "<config stem>_episode.csv" / "_summary.json".
ScenarioConfig load_scenario(const std::string& path);

struct VehicleSummary {
  int id = 0;
  int laps = 0;
  std::vector<double> lap_times;  // seconds between forward lap-line crossings
  int collisions = 0;
  int violations = 0;
  VehicleState final_state;
};

struct ExitSummary {
  std::vector<VehicleSummary> vehicles;
  std::vector<CollisionEvent> collisions;
  std::vector<Violation> violations;
  std::string episode_csv;
  std::string summary_json;
};

ExitSummary run_scenario(const ScenarioConfig& cfg);

// --- learned-planner training pipeline ---

struct RbfTrainConfig {
  VehicleState start;  // solver start state; pose is pinned to the origin
  double x_min = 4.0, x_max = 8.0;
  int x_count = 9;
  double y_min = -2.0, y_max = 2.0;
  int y_count = 9;
  double theta_min = -0.6, theta_max = 0.6;
  int theta_count = 3;
  double goal_kappa = 0.0;
  double epsilon = 0.0;  // kernel width; <= 0 picks automatically
  BvpOptions bvp;
  std::string dataset_csv;
  std::string network_path;
  std::string report_path;
};

RbfTrainConfig parse_rbf_train(const std::string& json_text,
                               const std::string& base_dir);
RbfTrainConfig load_rbf_train(const std::string& path);

struct RbfPipelineResult {
  int goals = 0;    // lattice size
  int trained = 0;  // converged -> training points (M)
  double epsilon = 0.0;
  double training_residual = 0.0;
  double worst_test_error = 0.0;  // endpoint space, over lattice midpoints
  double mean_test_error = 0.0;
  double inferences_per_second = 0.0;  // wall clock, measured outside the run loop
  std::string dataset_csv;
  std::string network_path;
  std::string report_path;
};

// build_training_set -> train_rbf -> midpoint test sweep; writes the
// dataset CSV, the network file (byte-identical across reruns) and a plain
// text report. Throughput in the report is measured, so only the network
// file is reproducible bit for bit.
RbfPipelineResult rbf_pipeline(const RbfTrainConfig& cfg);

}  // namespace chicane
