#include "chicane/raycast.hpp"

#include <cmath>

namespace chicane {

namespace {

// Occupancy test in the grid's own frame; off-grid is occupied.
struct GridLocal {
  const OccupancyGrid& grid;
  double inv_res;

  explicit GridLocal(const OccupancyGrid& g)
      : grid(g), inv_res(1.0 / g.resolution) {}

  bool blocked(double lx, double ly) const {
    int col = static_cast<int>(std::floor(lx * inv_res));
    int row = static_cast<int>(std::floor(ly * inv_res));
    if (!grid.in_bounds(col, row)) return true;
    return grid.at(col, row) >= grid.occupied_threshold;
  }
};

}  // namespace

double cast_ray(const OccupancyGrid& grid, double ox, double oy, double angle,
                double range_max, double march_step) {
  GridLocal g(grid);
  // Rotate the ray into the grid frame once so the marching loop is just
  // multiply-add plus a cell lookup.
  double c = std::cos(grid.origin.theta), s = std::sin(grid.origin.theta);
  double dx0 = ox - grid.origin.x, dy0 = oy - grid.origin.y;
  double lx0 = c * dx0 + s * dy0;
  double ly0 = -s * dx0 + c * dy0;
  double la = angle - grid.origin.theta;
  double dx = std::cos(la), dy = std::sin(la);

  if (g.blocked(lx0, ly0)) return 0.0;

  double lo = 0.0;  // last known-free distance
  long n_full = static_cast<long>(range_max / march_step);
  for (long i = 1; i <= n_full + 1; ++i) {
    double t = i * march_step;
    bool last = t >= range_max;
    if (last) t = range_max;
    if (g.blocked(lx0 + t * dx, ly0 + t * dy)) {
      // One bisection of [lo, t] narrows the crossing to a quarter step.
      double mid = 0.5 * (lo + t);
      if (g.blocked(lx0 + mid * dx, ly0 + mid * dy))
        return 0.5 * (lo + mid);
      return 0.5 * (mid + t);
    }
    lo = t;
    if (last) break;
  }
  return range_max;
}

LaserScan simulate_scan(const OccupancyGrid& grid, const Pose2D& pose,
                        const ScanConfig& cfg) {
  LaserScan scan;
  scan.angle_min = cfg.angle_min;
  scan.angle_max = cfg.angle_max;
  scan.range_max = cfg.range_max;
  scan.ranges.resize(cfg.beam_count);
  double step = effective_march_step(grid, cfg);
  double incr = cfg.beam_count > 1
                    ? (cfg.angle_max - cfg.angle_min) / (cfg.beam_count - 1)
                    : 0.0;
  for (int i = 0; i < cfg.beam_count; ++i) {
    double a = pose.theta + cfg.angle_min + i * incr;
    scan.ranges[i] = cast_ray(grid, pose.x, pose.y, a, cfg.range_max, step);
  }
  return scan;
}

}  // namespace chicane
