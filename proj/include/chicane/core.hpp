#pragma once

// Shared domain types: poses, frames, the occupancy grid, scans, waypoint
// paths, and the map/waypoint file loaders. Everything else builds on these.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace chicane {

inline constexpr double kPi = std::numbers::pi;

// Normalize an angle to (-pi, pi].
inline double wrap_angle(double a) {
  if (a > -kPi && a <= kPi) return a;
  double t = std::fmod(a + kPi, 2.0 * kPi);
  if (t <= 0.0) t += 2.0 * kPi;
  return t - kPi;
}

// Shortest signed rotation taking angle b onto angle a, in (-pi, pi].
inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // radians, kept in (-pi, pi] by the frame ops below
};

// Express pose p in the coordinate frame of `frame`.
inline Pose2D to_local_frame(const Pose2D& frame, const Pose2D& p) {
  double c = std::cos(frame.theta), s = std::sin(frame.theta);
  double dx = p.x - frame.x, dy = p.y - frame.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(p.theta - frame.theta)};
}

// Inverse of to_local_frame: map a frame-local pose back to world.
inline Pose2D from_local_frame(const Pose2D& frame, const Pose2D& local) {
  double c = std::cos(frame.theta), s = std::sin(frame.theta);
  return {frame.x + c * local.x - s * local.y,
          frame.y + s * local.x + c * local.y,
          wrap_angle(frame.theta + local.theta)};
}

// Pose composition: b interpreted in a's frame. Same math as from_local_frame;
// the separate name keeps call sites readable.
inline Pose2D compose(const Pose2D& a, const Pose2D& b) {
  return from_local_frame(a, b);
}

struct VehicleState {
  Pose2D pose;
  double v = 0.0;      // m/s, forward
  double kappa = 0.0;  // 1/m, signed path curvature (left positive)
};

struct ControlCommand {
  double speed = 0.0;  // m/s
  double kappa = 0.0;  // 1/m
};

struct CellIndex {
  int col = 0;
  int row = 0;
};

// Row-major occupancy grid. cells[row * width + col] is in [0, 1] where 1 is
// fully occupied. Row 0 / col 0 is the corner at the map origin pose; rows
// advance along the origin frame's +y, columns along +x. A cell counts as
// occupied when its value >= occupied_threshold. Anything outside the grid is
// treated as occupied everywhere in this library: vehicles cannot see or
// drive off the map.
struct OccupancyGrid {
  int width = 0;
  int height = 0;
  double resolution = 0.05;  // meters per cell
  Pose2D origin;             // world pose of the (0,0) cell corner
  double occupied_threshold = 0.65;
  std::vector<float> cells;

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  float at(int col, int row) const {
    return cells[static_cast<size_t>(row) * width + col];
  }
  bool occupied(int col, int row) const {
    return at(col, row) >= occupied_threshold;
  }

  // World point -> containing cell; nullopt when the point lies off the grid.
  std::optional<CellIndex> world_to_grid(double x, double y) const;
  // Center of a cell in world coordinates.
  Vec2 grid_to_world(int col, int row) const;
};

struct LaserScan {
  double angle_min = 0.0;  // relative to the sensor's +x axis
  double angle_max = 0.0;
  double range_max = 0.0;
  std::vector<double> ranges;  // meters, one per beam, evenly spaced angles

  int beam_count() const { return static_cast<int>(ranges.size()); }
  double angle_increment() const {
    return beam_count() > 1 ? (angle_max - angle_min) / (beam_count() - 1)
                            : 0.0;
  }
  double beam_angle(int i) const { return angle_min + i * angle_increment(); }
};

struct Waypoint {
  double x = 0.0;
  double y = 0.0;
  double speed = 0.0;  // target speed at this waypoint, m/s
};

struct WaypointPath {
  std::vector<Waypoint> points;
  bool closed = false;  // closed paths wrap from the last point to the first

  int segment_count() const {
    int n = static_cast<int>(points.size());
    if (n < 2) return 0;
    return closed ? n : n - 1;
  }
  Vec2 segment_start(int i) const { return {points[i].x, points[i].y}; }
  Vec2 segment_end(int i) const {
    const Waypoint& w = points[(i + 1) % points.size()];
    return {w.x, w.y};
  }
};

// Location on a path: segment index plus interpolation parameter in [0, 1].
struct PathPoint {
  int segment = 0;
  double t = 0.0;
  Vec2 position;
  double distance = 0.0;  // from the query point, for closest-point results
};

double path_length(const WaypointPath& path);
PathPoint closest_point_on_path(const WaypointPath& path, double x, double y);
// Point and tangent heading at an arc-length position. Closed paths wrap;
// open paths clamp to the endpoints.
void point_at_arc(const WaypointPath& path, double arc, Vec2* pos,
                  double* tangent_theta);
double speed_at(const WaypointPath& path, int segment, double t);

// Oriented rectangle, used for vehicle footprints.
struct Obb {
  double cx = 0.0, cy = 0.0;  // center
  double c = 1.0, s = 0.0;    // cos/sin of the long-axis heading
  double half_length = 0.0;
  double half_width = 0.0;
};

Obb footprint_obb(const Pose2D& pose, double length, double width);
bool obb_overlap(const Obb& a, const Obb& b);
// True when the rectangle overlaps any occupied cell (or pokes off the grid).
bool obb_hits_grid(const OccupancyGrid& grid, const Obb& obb);
// Euclidean distance from a point to the rectangle (0 inside).
double obb_distance(const Obb& obb, double x, double y);
// Mark every cell touched by the rectangle as fully occupied.
void stamp_obb(OccupancyGrid& grid, const Obb& obb);

// Load a map from an 8-bit binary PGM (P5) plus a flat "key: value" metadata
// file carrying resolution, origin, occupied_thresh and negate. With
// negate 0, white pixels are free: cell = (255 - pixel) / 255.
// Throws MalformedHeader / DimensionMismatch / BadThreshold.
OccupancyGrid load_map(const std::string& pgm_path,
                       const std::string& meta_path);

// Load waypoints from CSV rows "x,y,speed". '#' comments and blank lines are
// skipped. Throws ParseError on malformed rows, EmptyPath below 2 points.
WaypointPath load_waypoints(const std::string& csv_path, bool closed);

}  // namespace chicane
