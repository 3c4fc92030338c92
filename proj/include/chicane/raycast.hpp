#pragma once

// Range sensing against the occupancy grid: fixed-step ray marching with one
// bisection refinement, and a full simulated laser sweep built on top of it.

#include "chicane/core.hpp"

namespace chicane {

struct ScanConfig {
  double angle_min = -0.75 * kPi;  // 270 degree fan, like a hokuyo
  double angle_max = 0.75 * kPi;
  int beam_count = 1081;
  double range_max = 10.0;
  // Marching stride. <= 0 means "half the grid resolution", which keeps the
  // reported range within resolution/8 of the true surface after refinement.
  double march_step = 0.0;
};

// Distance from (ox, oy) along `angle` to the first occupied cell, capped at
// range_max. Leaving the grid counts as a hit. Returns 0 when the origin
// itself is inside an occupied (or off-grid) cell. The march samples every
// march_step meters and then bisects the bracketing interval once, so the
// result is within march_step/4 of the sampled crossing.
double cast_ray(const OccupancyGrid& grid, double ox, double oy, double angle,
                double range_max, double march_step);

// One beam per angle across [angle_min, angle_max] from the given sensor pose
// (beam angles are relative to pose.theta).
LaserScan simulate_scan(const OccupancyGrid& grid, const Pose2D& pose,
                        const ScanConfig& cfg);

inline double effective_march_step(const OccupancyGrid& grid,
                                   const ScanConfig& cfg) {
  return cfg.march_step > 0.0 ? cfg.march_step : grid.resolution * 0.5;
}

}  // namespace chicane
