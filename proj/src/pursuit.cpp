#include "chicane/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chicane/errors.hpp"

namespace chicane {

namespace {

// Closest point on the path, walking segments in forward order starting at
// `from`. Strict comparison keeps the earliest minimum, so on a closed path
// a tie between the segment ahead and one across the track resolves forward.
PathPoint closest_from(const WaypointPath& path, double x, double y, int from) {
  int n = path.segment_count();
  PathPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    int i = (from + k) % n;
    Vec2 a = path.segment_start(i), b = path.segment_end(i);
    double vx = b.x - a.x, vy = b.y - a.y;
    double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0)
      t = std::clamp(((x - a.x) * vx + (y - a.y) * vy) / len2, 0.0, 1.0);
    double px = a.x + t * vx, py = a.y + t * vy;
    double d = std::hypot(x - px, y - py);
    if (d < best.distance) best = {i, t, {px, py}, d};
  }
  return best;
}

LookaheadResult lookahead_from(const WaypointPath& path, const Pose2D& pose,
                               double lookahead, const PathPoint& closest) {
  int n = path.segment_count();
  for (int k = 0; k < n; ++k) {
    int i = (closest.segment + k) % n;
    if (!path.closed && closest.segment + k >= n) break;
    Vec2 a = path.segment_start(i), b = path.segment_end(i);
    double vx = b.x - a.x, vy = b.y - a.y;
    double fx = a.x - pose.x, fy = a.y - pose.y;
    double A = vx * vx + vy * vy;
    double B = 2.0 * (fx * vx + fy * vy);
    double C = fx * fx + fy * fy - lookahead * lookahead;
    double disc = B * B - 4.0 * A * C;
    if (A <= 0.0 || disc < 0.0) continue;
    double sq = std::sqrt(disc);
    double t_min = (k == 0) ? closest.t : 0.0;
    // Smaller root first: the earlier crossing along the walk direction.
    for (double t : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)}) {
      if (t < t_min - 1e-12 || t > 1.0 + 1e-12) continue;
      t = std::clamp(t, 0.0, 1.0);
      LookaheadResult out;
      out.point = {a.x + t * vx, a.y + t * vy};
      out.speed = speed_at(path, i, t);
      out.on_circle = true;
      return out;
    }
  }
  LookaheadResult out;
  out.point = closest.position;
  out.speed = speed_at(path, closest.segment, closest.t);
  out.on_circle = false;
  return out;
}

}  // namespace

LookaheadResult find_lookahead_point(const WaypointPath& path,
                                     const Pose2D& pose, double lookahead) {
  if (path.segment_count() == 0) throw EmptyPath("path has fewer than 2 points");
  PathPoint closest = closest_from(path, pose.x, pose.y, 0);
  return lookahead_from(path, pose, lookahead, closest);
}

ControlCommand pursuit_command(const Pose2D& pose, const Vec2& point,
                               double speed, const PursuitConfig& cfg) {
  Pose2D local = to_local_frame(pose, {point.x, point.y, 0.0});
  double d2 = local.x * local.x + local.y * local.y;
  if (d2 < 1e-12)
    throw DegenerateGoal("lookahead point coincides with the vehicle");
  double kappa = std::clamp(2.0 * local.y / d2, -cfg.kappa_max, cfg.kappa_max);
  return {speed, kappa};
}

PursuitTracker::PursuitTracker(WaypointPath path, PursuitConfig cfg)
    : path_(std::move(path)), cfg_(cfg) {
  if (path_.segment_count() == 0)
    throw EmptyPath("path has fewer than 2 points");
}

ControlCommand PursuitTracker::update(const Pose2D& pose) {
  PathPoint closest = closest_from(path_, pose.x, pose.y, cursor_);
  cursor_ = closest.segment;
  LookaheadResult look = lookahead_from(path_, pose, cfg_.lookahead, closest);
  double speed = look.speed > 0.0 ? look.speed : cfg_.default_speed;
  return pursuit_command(pose, look.point, speed, cfg_);
}

}  // namespace chicane
