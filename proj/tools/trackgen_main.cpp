// Writes the bundled course assets (maps, centerlines, roundabout routes)
// into a directory. The files under scenarios/ are exactly this tool's
// output.

#include <cstdio>
#include <iostream>
#include <string>

#include "chicane/trackgen.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: chicane-trackgen <output-dir>\n";
    return 2;
  }
  std::string dir = argv[1];
  try {
    using namespace chicane;
    StadiumSpec oval;
    save_map(stadium_map(oval), dir + "/oval.pgm", dir + "/oval.meta");
    save_waypoints(stadium_centerline(oval), dir + "/oval_wp.csv");

    save_map(asymmetric_room(), dir + "/room.pgm", dir + "/room.meta");

    RoundaboutSpec rb;
    save_map(roundabout_map(rb), dir + "/roundabout.pgm",
             dir + "/roundabout.meta");
    save_waypoints(roundabout_route(rb, 'W', 'E'), dir + "/roundabout_we.csv");
    save_waypoints(roundabout_route(rb, 'S', 'W'), dir + "/roundabout_sw.csv");
    save_waypoints(roundabout_route(rb, 'E', 'S'), dir + "/roundabout_es.csv");
    std::printf(
        "wrote oval.{pgm,meta}, oval_wp.csv, room.{pgm,meta}, "
        "roundabout.{pgm,meta}, roundabout_{we,sw,es}.csv under %s\n",
        dir.c_str());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
