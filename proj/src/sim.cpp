#include "chicane/sim.hpp"

#include <algorithm>
#include <cmath>

#include "chicane/errors.hpp"

namespace chicane {

VehicleState step_vehicle(const VehicleState& state, const VehicleParams& params,
                          const ControlCommand& cmd, double dt) {
  if (dt <= 0.0) throw NonPositiveDt("dt must be > 0, got " + std::to_string(dt));

  // Curvature slews toward the (clamped) command at kappa_rate_max.
  double kappa_target = std::clamp(cmd.kappa, -params.kappa_max, params.kappa_max);
  double dk = std::clamp(kappa_target - state.kappa, -params.kappa_rate_max * dt,
                         params.kappa_rate_max * dt);
  double kappa = state.kappa + dk;

  // Speed moves toward the command under accel/decel limits; no reverse gear.
  double v_target = std::clamp(cmd.speed, 0.0, params.v_max);
  double v;
  if (v_target > state.v)
    v = std::min(state.v + params.accel_max * dt, v_target);
  else
    v = std::max(state.v - params.decel_max * dt, v_target);
  v = std::clamp(v, 0.0, params.v_max);

  // RK4 over the pose with v, kappa constant for the step. Only psi feeds
  // back into the derivatives, so the stages just re-evaluate heading.
  double x = state.pose.x, y = state.pose.y, psi = state.pose.theta;
  double w = v * kappa;
  double k1x = v * std::cos(psi), k1y = v * std::sin(psi);
  double psi2 = psi + 0.5 * dt * w;
  double k2x = v * std::cos(psi2), k2y = v * std::sin(psi2);
  // psi' is constant, so stages 2 and 3 coincide for heading.
  double k3x = k2x, k3y = k2y;
  double psi4 = psi + dt * w;
  double k4x = v * std::cos(psi4), k4y = v * std::sin(psi4);

  VehicleState out;
  out.pose.x = x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x);
  out.pose.y = y + dt / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y);
  out.pose.theta = wrap_angle(psi + dt * w);
  out.v = v;
  out.kappa = kappa;
  return out;
}

VehicleRecord& World::vehicle(int id) {
  for (auto& rec : vehicles)
    if (rec.id == id) return rec;
  throw UnknownVehicleId("no vehicle with id " + std::to_string(id));
}

const VehicleRecord& World::vehicle(int id) const {
  return const_cast<World*>(this)->vehicle(id);
}

void World::add_vehicle(int id, const VehicleState& s, const VehicleParams& p) {
  for (const auto& rec : vehicles)
    if (rec.id == id)
      throw UnknownVehicleId("duplicate vehicle id " + std::to_string(id));
  VehicleRecord rec;
  rec.id = id;
  rec.state = s;
  rec.params = p;
  auto pos = std::lower_bound(
      vehicles.begin(), vehicles.end(), id,
      [](const VehicleRecord& r, int key) { return r.id < key; });
  vehicles.insert(pos, std::move(rec));
}

std::vector<CollisionEvent> step_world(
    World& world, const std::map<int, ControlCommand>& commands, double dt) {
  for (const auto& [id, cmd] : commands) {
    world.vehicle(id).last_cmd = cmd;  // throws on unknown id
  }
  for (auto& rec : world.vehicles) {
    if (rec.collided) continue;
    rec.state = step_vehicle(rec.state, rec.params, rec.last_cmd, dt);
  }
  world.time += dt;

  std::vector<CollisionEvent> events;
  auto freeze = [&](VehicleRecord& rec, int other, double cx, double cy) {
    rec.collided = true;
    rec.state.v = 0.0;
    events.push_back({world.time, rec.id, other, cx, cy});
  };

  // Wall contacts first, then vehicle pairs, both in ascending id order so
  // event order is reproducible.
  for (auto& rec : world.vehicles) {
    if (rec.collided) continue;
    Obb fp = footprint_obb(rec.state.pose, rec.params.length, rec.params.width);
    if (obb_hits_grid(world.grid, fp))
      freeze(rec, -1, rec.state.pose.x, rec.state.pose.y);
  }
  for (size_t i = 0; i < world.vehicles.size(); ++i) {
    for (size_t j = i + 1; j < world.vehicles.size(); ++j) {
      VehicleRecord& a = world.vehicles[i];
      VehicleRecord& b = world.vehicles[j];
      if (a.collided && b.collided) continue;  // already both frozen
      Obb fa = footprint_obb(a.state.pose, a.params.length, a.params.width);
      Obb fb = footprint_obb(b.state.pose, b.params.length, b.params.width);
      if (!obb_overlap(fa, fb)) continue;
      double cx = 0.5 * (a.state.pose.x + b.state.pose.x);
      double cy = 0.5 * (a.state.pose.y + b.state.pose.y);
      // One event per contact, attributed to the lower id with the partner
      // recorded; a vehicle already frozen keeps its original event.
      if (!a.collided && !b.collided) {
        a.collided = true;
        a.state.v = 0.0;
        b.collided = true;
        b.state.v = 0.0;
        events.push_back({world.time, a.id, b.id, cx, cy});
      } else if (!a.collided) {
        freeze(a, b.id, cx, cy);
      } else {
        freeze(b, a.id, cx, cy);
      }
    }
  }
  return events;
}

LaserScan sense(const World& world, int vehicle_id, const ScanConfig& scan_cfg,
                const NoiseConfig& noise, Rng& rng) {
  const VehicleRecord& ego = world.vehicle(vehicle_id);
  LaserScan scan;
  bool others = world.vehicles.size() > 1;
  if (others) {
    OccupancyGrid scratch = world.grid;
    for (const auto& rec : world.vehicles) {
      if (rec.id == vehicle_id) continue;
      stamp_obb(scratch,
                footprint_obb(rec.state.pose, rec.params.length, rec.params.width));
    }
    scan = simulate_scan(scratch, ego.state.pose, scan_cfg);
  } else {
    scan = simulate_scan(world.grid, ego.state.pose, scan_cfg);
  }
  if (noise.range_sigma > 0.0) {
    for (double& r : scan.ranges)
      r = std::clamp(r + rng.normal(0.0, noise.range_sigma), 0.0,
                     scan_cfg.range_max);
  }
  return scan;
}

OdometryDelta odometry(const VehicleState& prev, const VehicleState& next,
                       const NoiseConfig& noise, Rng& rng) {
  Pose2D d = to_local_frame(prev.pose, next.pose);
  OdometryDelta out{d.x, d.y, d.theta, next.v};
  if (noise.odom_pos_sigma > 0.0) {
    out.dx += rng.normal(0.0, noise.odom_pos_sigma);
    out.dy += rng.normal(0.0, noise.odom_pos_sigma);
  }
  if (noise.odom_theta_sigma > 0.0)
    out.dtheta = wrap_angle(out.dtheta + rng.normal(0.0, noise.odom_theta_sigma));
  if (noise.odom_v_sigma > 0.0)
    out.v = std::max(0.0, out.v + rng.normal(0.0, noise.odom_v_sigma));
  return out;
}

}  // namespace chicane
