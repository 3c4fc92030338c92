#include "chicane/trackgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "chicane/errors.hpp"

namespace chicane {

namespace {

double dist_to_segment(double px, double py, double ax, double ay, double bx,
                       double by) {
  double vx = bx - ax, vy = by - ay;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((px - ax) * vx + (py - ay) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * vx), py - (ay + t * vy));
}

OccupancyGrid solid_grid(int width, int height, double resolution) {
  OccupancyGrid g;
  g.width = width;
  g.height = height;
  g.resolution = resolution;
  g.cells.assign(static_cast<size_t>(width) * height, 1.0f);
  return g;
}

void append_arc(WaypointPath& path, double cx, double cy, double r, double a0,
                double a1, double spacing, double speed) {
  int n = std::max(1, static_cast<int>(std::ceil(std::abs(a1 - a0) * r / spacing)));
  for (int i = 0; i <= n; ++i) {
    double a = a0 + (a1 - a0) * i / n;
    path.points.push_back({cx + r * std::cos(a), cy + r * std::sin(a), speed});
  }
}

void append_line(WaypointPath& path, double ax, double ay, double bx, double by,
                 double spacing, double speed) {
  int n = std::max(1, static_cast<int>(std::ceil(std::hypot(bx - ax, by - ay) / spacing)));
  for (int i = 0; i <= n; ++i) {
    double t = static_cast<double>(i) / n;
    path.points.push_back({ax + t * (bx - ax), ay + t * (by - ay), speed});
  }
}

// Waypoints closer than this are merged when segments are appended
// back-to-back (arc end == next line start).
void dedupe(WaypointPath& path) {
  std::vector<Waypoint> out;
  for (const Waypoint& w : path.points) {
    if (!out.empty() && std::hypot(w.x - out.back().x, w.y - out.back().y) < 1e-9)
      continue;
    out.push_back(w);
  }
  path.points = std::move(out);
}

}  // namespace

void save_map(const OccupancyGrid& grid, const std::string& pgm_path,
              const std::string& meta_path) {
  std::ofstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw MapLoadError("cannot write map image: " + pgm_path);
  pgm << "P5\n" << grid.width << " " << grid.height << "\n255\n";
  std::vector<unsigned char> pixels(grid.cells.size());
  for (size_t i = 0; i < grid.cells.size(); ++i) {
    double v = std::clamp(static_cast<double>(grid.cells[i]), 0.0, 1.0);
    pixels[i] = static_cast<unsigned char>(255.0 - std::lround(v * 255.0));
  }
  pgm.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!pgm) throw MapLoadError("short write on map image: " + pgm_path);

  std::ofstream meta(meta_path);
  if (!meta) throw MapLoadError("cannot write map metadata: " + meta_path);
  size_t slash = pgm_path.find_last_of('/');
  std::string image =
      slash == std::string::npos ? pgm_path : pgm_path.substr(slash + 1);
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "image: %s\nresolution: %.17g\norigin: [%.17g, %.17g, %.17g]\n"
                "occupied_thresh: %.17g\nnegate: 0\n",
                image.c_str(), grid.resolution, grid.origin.x, grid.origin.y,
                grid.origin.theta, grid.occupied_threshold);
  meta << buf;
  if (!meta) throw MapLoadError("short write on map metadata: " + meta_path);
}

void save_waypoints(const WaypointPath& path, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) throw ParseError("cannot write waypoint file: " + csv_path);
  out << "# x,y,speed\n";
  char buf[96];
  for (const Waypoint& w : path.points) {
    std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", w.x, w.y, w.speed);
    out << buf;
  }
  if (!out) throw ParseError("short write on waypoint file: " + csv_path);
}

OccupancyGrid stadium_map(const StadiumSpec& spec) {
  double reach = spec.radius + spec.half_width + spec.margin;
  double w_m = spec.straight + 2.0 * reach;
  double h_m = 2.0 * reach;
  int width = static_cast<int>(std::lround(w_m / spec.resolution));
  int height = static_cast<int>(std::lround(h_m / spec.resolution));
  OccupancyGrid g = solid_grid(width, height, spec.resolution);
  double cx = w_m / 2.0, cy = h_m / 2.0;
  double ax = cx - spec.straight / 2.0, bx = cx + spec.straight / 2.0;
  for (int row = 0; row < height; ++row) {
    for (int col = 0; col < width; ++col) {
      Vec2 p = g.grid_to_world(col, row);
      double d = dist_to_segment(p.x, p.y, ax, cy, bx, cy);
      if (std::abs(d - spec.radius) < spec.half_width)
        g.cells[static_cast<size_t>(row) * width + col] = 0.0f;
    }
  }
  return g;
}

WaypointPath stadium_centerline(const StadiumSpec& spec) {
  double reach = spec.radius + spec.half_width + spec.margin;
  double cx = (spec.straight + 2.0 * reach) / 2.0, cy = reach;
  double ax = cx - spec.straight / 2.0, bx = cx + spec.straight / 2.0;
  double r = spec.radius;
  WaypointPath path;
  path.closed = true;
  append_line(path, ax, cy - r, bx, cy - r, spec.spacing, spec.speed);
  append_arc(path, bx, cy, r, -M_PI / 2.0, M_PI / 2.0, spec.spacing, spec.speed);
  append_line(path, bx, cy + r, ax, cy + r, spec.spacing, spec.speed);
  append_arc(path, ax, cy, r, M_PI / 2.0, 3.0 * M_PI / 2.0, spec.spacing,
             spec.speed);
  dedupe(path);
  // The final arc point coincides with the first line point; the closed
  // path supplies that segment itself.
  if (path.points.size() > 1 &&
      std::hypot(path.points.back().x - path.points.front().x,
                 path.points.back().y - path.points.front().y) < 1e-9)
    path.points.pop_back();
  return path;
}

OccupancyGrid asymmetric_room() {
  OccupancyGrid g = solid_grid(100, 100, 0.05);
  auto carve = [&g](int c0, int r0, int c1, int r1) {
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) g.cells[static_cast<size_t>(r) * 100 + c] = 0.0f;
  };
  auto fill = [&g](int c0, int r0, int c1, int r1) {
    for (int r = r0; r <= r1; ++r)
      for (int c = c0; c <= c1; ++c) g.cells[static_cast<size_t>(r) * 100 + c] = 1.0f;
  };
  carve(1, 1, 98, 98);             // interior inside a one-cell border
  fill(15, 15, 35, 30);            // block low-left
  fill(60, 70, 64, 98);            // stub from the top wall
  fill(78, 20, 95, 26);            // bar on the right
  // Free-standing column east of center. The other three pieces nearly
  // reproduce each other under a half-turn about the room center; the
  // column's rotational twin is open floor, so no two poses share a scan.
  fill(74, 46, 79, 53);
  return g;
}

OccupancyGrid roundabout_map(const RoundaboutSpec& spec) {
  int n = static_cast<int>(std::lround(spec.size / spec.resolution));
  OccupancyGrid g = solid_grid(n, n, spec.resolution);
  double c = spec.size / 2.0;
  double ahw = spec.arm_half_width;
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      Vec2 p = g.grid_to_world(col, row);
      double r = std::hypot(p.x - c, p.y - c);
      bool free = r > spec.island_radius && r < spec.ring_radius;
      bool in_w = p.x >= spec.wall && p.x <= c && std::abs(p.y - c) <= ahw;
      bool in_s = p.y >= spec.wall && p.y <= c && std::abs(p.x - c) <= ahw;
      bool in_e = p.x >= c && p.x <= spec.size - spec.wall &&
                  std::abs(p.y - c) <= ahw;
      if ((in_w || in_s || in_e) && r > spec.island_radius) free = true;
      if (free) g.cells[static_cast<size_t>(row) * n + col] = 0.0f;
    }
  }
  return g;
}

WaypointPath roundabout_route(const RoundaboutSpec& spec, char from, char to) {
  auto arm_unit = [](char arm) -> Vec2 {
    switch (arm) {
      case 'W': return {-1.0, 0.0};
      case 'S': return {0.0, -1.0};
      case 'E': return {1.0, 0.0};
      default: throw ConfigError(std::string("unknown roundabout arm '") + arm + "'");
    }
  };
  Vec2 u_in = arm_unit(from);
  Vec2 u_out = arm_unit(to);
  double c = spec.size / 2.0;
  double r_mid = (spec.island_radius + spec.ring_radius) / 2.0;
  double lane = spec.lane_offset;
  double arm_end = c - spec.wall - 0.3;  // how far out the straights reach
  // Right-of-travel offsets: inbound runs down one side of the arm, outbound
  // up the other, so entering, exiting and holding vehicles never share a line.
  Vec2 off_in{-u_in.y * lane, u_in.x * lane};
  Vec2 off_out{u_out.y * lane, -u_out.x * lane};
  double reach = std::sqrt(r_mid * r_mid - lane * lane);  // lane meets the ring
  Vec2 pin{c + u_in.x * reach + off_in.x, c + u_in.y * reach + off_in.y};
  Vec2 pout{c + u_out.x * reach + off_out.x, c + u_out.y * reach + off_out.y};
  double a0 = std::atan2(pin.y - c, pin.x - c);
  double sweep = std::atan2(pout.y - c, pout.x - c) - a0;
  while (sweep <= 1e-9) sweep += 2.0 * M_PI;  // counter-clockwise around the island
  WaypointPath path;
  path.closed = false;
  append_line(path, c + u_in.x * arm_end + off_in.x,
              c + u_in.y * arm_end + off_in.y, pin.x, pin.y, spec.spacing,
              spec.speed);
  append_arc(path, c, c, r_mid, a0, a0 + sweep, spec.spacing, spec.speed);
  append_line(path, pout.x, pout.y, c + u_out.x * arm_end + off_out.x,
              c + u_out.y * arm_end + off_out.y, spec.spacing, spec.speed);
  dedupe(path);
  return path;
}

}  // namespace chicane
