#pragma once

// Episode-log reader and the SVG trajectory plotter.

#include <string>
#include <vector>

namespace chicane {

struct EpisodeRow {
  double time = 0.0;
  int id = 0;
  double x = 0.0, y = 0.0, theta = 0.0;
  double v = 0.0, kappa = 0.0;
  double cmd_speed = 0.0, cmd_kappa = 0.0;
  bool collided = false;
  bool has_estimate = false;
  double est_x = 0.0, est_y = 0.0, est_theta = 0.0;
};

struct ViolationRow {
  double time = 0.0;
  std::string monitor;
  int vehicle = 0;
  double value = 0.0;
};

struct EpisodeLog {
  std::vector<EpisodeRow> rows;
  std::vector<ViolationRow> violations;
};

// Throws MissingLog when the file does not exist, ParseError on bad rows.
EpisodeLog read_episode(const std::string& csv_path);

// Map occupancy outline plus one polyline per vehicle (distinct style
// class each) and a marker where a vehicle first collides. Same inputs,
// same bytes.
void emit_plot(const std::string& episode_csv, const std::string& map_pgm,
               const std::string& map_meta, const std::string& out_svg);

}  // namespace chicane
