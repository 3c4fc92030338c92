#pragma once

// Procedural test-course builders plus the writers that are the inverse of
// load_map / load_waypoints. The scenario assets checked into scenarios/
// come straight from these, via the trackgen tool.

#include <string>

#include "chicane/core.hpp"

namespace chicane {

// Binary PGM (P5, maxval 255, negate-0 convention: white = free) plus a
// "key: value" metadata file. Cells quantized to 1/255 round-trip exactly.
void save_map(const OccupancyGrid& grid, const std::string& pgm_path,
              const std::string& meta_path);

// CSV rows "x,y,speed" with a comment header.
void save_waypoints(const WaypointPath& path, const std::string& csv_path);

// Stadium oval: two straights joined by semicircular caps, free corridor of
// 2 * half_width around the centerline, solid elsewhere. The map spans
// straight + 2*(radius + half_width + margin) across and
// 2*(radius + half_width + margin) high, origin at (0, 0).
struct StadiumSpec {
  double straight = 3.0;    // m, central segment length
  double radius = 2.0;      // m, centerline cap radius
  double half_width = 0.6;  // m, free space each side of the centerline
  double margin = 0.4;      // m of solid wall beyond the outer edge
  double resolution = 0.05;
  double speed = 2.0;    // waypoint speed, m/s
  double spacing = 0.25;  // m between consecutive waypoints
};

OccupancyGrid stadium_map(const StadiumSpec& spec);

// Closed centerline loop, counter-clockwise, starting at the left end of the
// bottom straight.
WaypointPath stadium_centerline(const StadiumSpec& spec);

// 5x5 m furnished room with an off-center block, a wall stub, a side bar
// and a free-standing column: no pose-aliasing symmetry (the column's
// half-turn twin is open floor), so a single scan pins a pose down. Used
// for localization runs.
OccupancyGrid asymmetric_room();

// Roundabout: circular island centered in a square map, a free annulus
// around it, and three straight arms (west, south, east) meeting the ring.
struct RoundaboutSpec {
  double size = 12.0;           // m, square side; island sits at the center
  double island_radius = 1.2;   // m
  double ring_radius = 3.2;     // m, outer edge of the free annulus
  double arm_half_width = 0.8;  // m
  double wall = 0.5;            // m kept solid at the map edge
  double lane_offset = 0.35;    // m, keep-right split between arm directions
  double resolution = 0.05;
  double speed = 1.5;   // waypoint speed, m/s
  double spacing = 0.2;  // m between route waypoints
};

OccupancyGrid roundabout_map(const RoundaboutSpec& spec);

// Open route: in along one arm, counter-clockwise around the ring, out
// another arm. Arms are named 'W', 'S', 'E'; from == to makes a U-turn.
// Inbound and outbound legs keep to the right of the arm axis (lane_offset),
// so opposing routes through one arm never share a line. Throws ConfigError
// on an unknown arm name.
WaypointPath roundabout_route(const RoundaboutSpec& spec, char from, char to);

}  // namespace chicane
