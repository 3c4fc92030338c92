#pragma once

// Follow-The-Gap reactive avoidance: threshold the scan into gaps, pick the
// widest, and steer toward a blend of its center and the goal direction. The
// blend weights the gap more heavily the closer the nearest obstacle is, so
// avoidance dominates in tight quarters and goal-seeking on open track.

#include <vector>

#include "chicane/core.hpp"

namespace chicane {

struct Gap {
  int start_idx = 0;  // inclusive beam indices
  int end_idx = 0;
  double center_angle = 0.0;   // beam-frame angle of the gap center
  double angular_width = 0.0;  // (end - start + 1) * angle increment
};

struct FtgConfig {
  double gap_threshold = 2.0;   // m; beams at or above this count as free
  double alpha = 4.0;           // gap-weight numerator (wg = alpha / d_min)
  double beta = 1.0;            // goal weight
  double speed_nominal = 2.0;   // m/s on open track
  double d_stop = 0.3;          // m; stop when the nearest return is this close
  double steering_gain = 2.0;   // kappa per radian of blended heading
  double kappa_max = 3.0;
};

// Maximal runs of beams with range >= gap_threshold, in beam order.
std::vector<Gap> build_gap_array(const LaserScan& scan, const FtgConfig& cfg);

// Widest gap by angular width; earlier gap wins ties. Throws EmptyGapList.
Gap find_max_gap(const std::vector<Gap>& gaps);

// Blended steering command. goal_angle is the direction to the goal in the
// scan's frame. A fully blocked scan (no gaps) commands a stop.
ControlCommand ftg_command(const LaserScan& scan, double goal_angle,
                           const FtgConfig& cfg);

}  // namespace chicane
