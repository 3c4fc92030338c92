#pragma once

// Pure pursuit waypoint tracking: intersect a lookahead circle with the
// path polyline and steer along the arc through the intersection point
// (kappa = 2 * y_local / d^2).

#include "chicane/core.hpp"

namespace chicane {

struct PursuitConfig {
  double lookahead = 1.0;      // m
  double default_speed = 2.0;  // used where waypoint speeds are zero
  double kappa_max = 3.0;
};

struct LookaheadResult {
  Vec2 point;
  double speed = 0.0;  // path speed interpolated at the point
  bool on_circle = false;  // false when falling back to the closest point
};

// First intersection of the lookahead circle with the path at or beyond the
// closest point, walking forward (closed paths wrap). When the circle misses
// the path entirely, falls back to the closest path point. Throws EmptyPath.
LookaheadResult find_lookahead_point(const WaypointPath& path,
                                     const Pose2D& pose, double lookahead);

// Curvature of the arc from `pose` through `point`. Throws DegenerateGoal
// when the point coincides with the pose.
ControlCommand pursuit_command(const Pose2D& pose, const Vec2& point,
                               double speed, const PursuitConfig& cfg);

// Stateful tracker: remembers the last path segment so successive queries
// walk forward instead of re-searching, which keeps lap progress monotone on
// self-crossing or pinched tracks.
class PursuitTracker {
 public:
  PursuitTracker(WaypointPath path, PursuitConfig cfg);

  ControlCommand update(const Pose2D& pose);
  const WaypointPath& path() const { return path_; }
  int cursor() const { return cursor_; }

 private:
  WaypointPath path_;
  PursuitConfig cfg_;
  int cursor_ = 0;  // segment index of the last closest point
};

}  // namespace chicane
