#pragma once

// Multi-vehicle kinematic simulator. Vehicles follow curvature-command
// kinematics (x' = v cos psi, y' = v sin psi, psi' = v * kappa) integrated
// with RK4; commanded speed and curvature pass through rate limits first.

#include <map>
#include <vector>

#include "chicane/core.hpp"
#include "chicane/raycast.hpp"
#include "chicane/rng.hpp"

namespace chicane {

struct VehicleParams {
  double wheelbase = 0.325;      // m (informational; kinematics use curvature)
  double v_max = 7.0;            // m/s
  double accel_max = 4.0;        // m/s^2
  double decel_max = 6.0;        // m/s^2
  double kappa_max = 3.0;        // 1/m
  double kappa_rate_max = 10.0;  // 1/m/s
  double length = 0.5;           // footprint, m
  double width = 0.3;
};

// One integration step. Slew limits are applied to the command first, then
// the pose advances with the post-slew speed/curvature held constant across
// the step. Throws NonPositiveDt.
VehicleState step_vehicle(const VehicleState& state, const VehicleParams& params,
                          const ControlCommand& cmd, double dt);

struct VehicleRecord {
  int id = 0;
  VehicleState state;
  VehicleParams params;
  ControlCommand last_cmd;  // held between planner ticks
  bool collided = false;    // frozen permanently once true
};

struct CollisionEvent {
  double time = 0.0;
  int vehicle_id = -1;
  int other_id = -1;  // -1 means a static map cell
  double x = 0.0;
  double y = 0.0;
};

struct World {
  OccupancyGrid grid;
  std::vector<VehicleRecord> vehicles;  // kept sorted by id
  double time = 0.0;
  uint64_t rng_seed = 0;

  // Throws UnknownVehicleId.
  VehicleRecord& vehicle(int id);
  const VehicleRecord& vehicle(int id) const;
  void add_vehicle(int id, const VehicleState& s, const VehicleParams& p);
};

// Advance every vehicle one step (ascending id) and run collision checks.
// Vehicles without an entry in `commands` hold their last command; collided
// vehicles stay frozen. Each colliding pair / wall contact is reported once,
// at the step where the footprints first overlap.
std::vector<CollisionEvent> step_world(
    World& world, const std::map<int, ControlCommand>& commands, double dt);

struct NoiseConfig {
  double range_sigma = 0.0;  // additive per-beam, m
  double odom_pos_sigma = 0.0;
  double odom_theta_sigma = 0.0;
  double odom_v_sigma = 0.0;
};

// Simulated scan from a vehicle's pose. Other vehicles' footprints are
// stamped into a scratch copy of the grid so they occlude like walls. With
// range_sigma > 0, per-beam Gaussian noise is added (clamped to
// [0, range_max]); sigma 0 draws nothing from the rng.
LaserScan sense(const World& world, int vehicle_id, const ScanConfig& scan_cfg,
                const NoiseConfig& noise, Rng& rng);

// Body-frame displacement between two states, as an odometry source would
// report it. Noise sigmas of 0 give the exact delta.
struct OdometryDelta {
  double dx = 0.0;  // forward, in the previous pose's frame
  double dy = 0.0;  // left
  double dtheta = 0.0;
  double v = 0.0;
};

OdometryDelta odometry(const VehicleState& prev, const VehicleState& next,
                       const NoiseConfig& noise, Rng& rng);

}  // namespace chicane
