#include "chicane/ftg.hpp"

#include <algorithm>

#include "chicane/errors.hpp"

namespace chicane {

std::vector<Gap> build_gap_array(const LaserScan& scan, const FtgConfig& cfg) {
  std::vector<Gap> gaps;
  double incr = scan.angle_increment();
  int n = scan.beam_count();
  int start = -1;
  for (int i = 0; i <= n; ++i) {
    bool free_beam = i < n && scan.ranges[i] >= cfg.gap_threshold;
    if (free_beam) {
      if (start < 0) start = i;
    } else if (start >= 0) {
      Gap g;
      g.start_idx = start;
      g.end_idx = i - 1;
      g.center_angle = scan.beam_angle(start) +
                       0.5 * (g.end_idx - g.start_idx) * incr;
      g.angular_width = (g.end_idx - g.start_idx + 1) * incr;
      gaps.push_back(g);
      start = -1;
    }
  }
  return gaps;
}

Gap find_max_gap(const std::vector<Gap>& gaps) {
  if (gaps.empty()) throw EmptyGapList("no gaps above threshold");
  const Gap* best = &gaps[0];
  for (const Gap& g : gaps)
    if (g.angular_width > best->angular_width) best = &g;
  return *best;
}

ControlCommand ftg_command(const LaserScan& scan, double goal_angle,
                           const FtgConfig& cfg) {
  std::vector<Gap> gaps = build_gap_array(scan, cfg);
  if (gaps.empty()) return {0.0, 0.0};  // boxed in: stop

  Gap best = find_max_gap(gaps);
  double d_min = *std::min_element(scan.ranges.begin(), scan.ranges.end());
  d_min = std::max(d_min, 0.05);  // keep the gap weight finite

  // Convex blend: the gap center dominates as d_min shrinks.
  double wg = cfg.alpha / d_min;
  double heading = (wg * best.center_angle + cfg.beta * goal_angle) /
                   (wg + cfg.beta);

  double kappa = std::clamp(heading * cfg.steering_gain, -cfg.kappa_max,
                            cfg.kappa_max);
  // Full speed with 2*d_stop of clearance, tapering linearly to a stop.
  double speed =
      cfg.speed_nominal * std::clamp(d_min / cfg.d_stop - 1.0, 0.0, 1.0);
  return {speed, kappa};
}

}  // namespace chicane
