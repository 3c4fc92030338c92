#include "chicane/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "chicane/core.hpp"
#include "chicane/errors.hpp"

namespace chicane {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double to_num(const std::string& s, int lineno) {
  try {
    size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("episode log line " + std::to_string(lineno) +
                     ": bad number \"" + s + "\"");
  }
}

}  // namespace

EpisodeLog read_episode(const std::string& csv_path) {
  if (!std::filesystem::exists(csv_path))
    throw MissingLog("no episode log at " + csv_path);
  std::ifstream in(csv_path);
  if (!in) throw MissingLog("cannot open episode log: " + csv_path);
  EpisodeLog log;
  std::string line;
  int lineno = 0;
  bool in_violations = false;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.rfind("# violations", 0) == 0) in_violations = true;
      continue;
    }
    if (!saw_header && !in_violations) {
      // column header row
      if (line.rfind("time,", 0) != 0)
        throw ParseError("episode log line " + std::to_string(lineno) +
                         ": expected the column header, got: " + line);
      saw_header = true;
      continue;
    }
    std::vector<std::string> f = split_csv(line);
    if (in_violations) {
      if (f.size() != 4)
        throw ParseError("violation line " + std::to_string(lineno) +
                         ": expected time,monitor,vehicle,value");
      ViolationRow v;
      v.time = to_num(f[0], lineno);
      v.monitor = f[1];
      v.vehicle = static_cast<int>(to_num(f[2], lineno));
      v.value = to_num(f[3], lineno);
      log.violations.push_back(v);
      continue;
    }
    if (f.size() != 13)
      throw ParseError("episode log line " + std::to_string(lineno) +
                       ": expected 13 columns, got " +
                       std::to_string(f.size()));
    EpisodeRow r;
    r.time = to_num(f[0], lineno);
    r.id = static_cast<int>(to_num(f[1], lineno));
    r.x = to_num(f[2], lineno);
    r.y = to_num(f[3], lineno);
    r.theta = to_num(f[4], lineno);
    r.v = to_num(f[5], lineno);
    r.kappa = to_num(f[6], lineno);
    r.cmd_speed = to_num(f[7], lineno);
    r.cmd_kappa = to_num(f[8], lineno);
    r.collided = to_num(f[9], lineno) != 0.0;
    if (!f[10].empty() || !f[11].empty() || !f[12].empty()) {
      r.has_estimate = true;
      r.est_x = to_num(f[10], lineno);
      r.est_y = to_num(f[11], lineno);
      r.est_theta = to_num(f[12], lineno);
    }
    log.rows.push_back(r);
  }
  if (!saw_header)
    throw ParseError("episode log has no header row: " + csv_path);
  return log;
}

namespace {

constexpr double kScale = 60.0;  // px per meter

const char* kStyles =
    "  <style>\n"
    "    .wall { fill: #3a3f44; }\n"
    "    .frame { fill: none; stroke: #3a3f44; stroke-width: 1; }\n"
    "    .traj { fill: none; stroke-width: 2.5; stroke-linejoin: round; }\n"
    "    .veh0 { stroke: #1f77b4; }\n"
    "    .veh1 { stroke: #ff7f0e; }\n"
    "    .veh2 { stroke: #2ca02c; }\n"
    "    .veh3 { stroke: #9467bd; }\n"
    "    .veh4 { stroke: #8c564b; }\n"
    "    .veh5 { stroke: #e377c2; }\n"
    "    .crash { stroke: #d62728; stroke-width: 3; }\n"
    "  </style>\n";

}  // namespace

void emit_plot(const std::string& episode_csv, const std::string& map_pgm,
               const std::string& map_meta, const std::string& out_svg) {
  EpisodeLog log = read_episode(episode_csv);
  OccupancyGrid grid = load_map(map_pgm, map_meta);

  double w_m = grid.width * grid.resolution;
  double h_m = grid.height * grid.resolution;
  // SVG y runs down; world y runs up. Emit flipped y directly.
  auto px = [&](double x) { return (x - grid.origin.x) * kScale; };
  auto py = [&](double y) { return (h_m - (y - grid.origin.y)) * kScale; };

  std::ostringstream svg;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" "
                "height=\"%.0f\" viewBox=\"0 0 %.2f %.2f\">\n",
                w_m * kScale, h_m * kScale, w_m * kScale, h_m * kScale);
  svg << buf << kStyles;
  svg << "  <rect class=\"frame\" x=\"0.5\" y=\"0.5\" width=\""
      << w_m * kScale - 1 << "\" height=\"" << h_m * kScale - 1 << "\"/>\n";

  // Occupancy outline: occupied cells with a free 4-neighbor, merged into
  // horizontal runs.
  auto occupied = [&](int col, int row) {
    if (col < 0 || col >= grid.width || row < 0 || row >= grid.height)
      return true;
    return grid.cells[static_cast<size_t>(row) * grid.width + col] >=
           grid.occupied_threshold;
  };
  auto boundary = [&](int col, int row) {
    if (!occupied(col, row)) return false;
    return !occupied(col - 1, row) || !occupied(col + 1, row) ||
           !occupied(col, row - 1) || !occupied(col, row + 1);
  };
  double cell_px = grid.resolution * kScale;
  for (int row = 0; row < grid.height; ++row) {
    int col = 0;
    while (col < grid.width) {
      if (!boundary(col, row)) {
        ++col;
        continue;
      }
      int run = col;
      while (run < grid.width && boundary(run, row)) ++run;
      double x0 = col * cell_px;
      double y0 = (grid.height - 1 - row) * cell_px;
      std::snprintf(buf, sizeof buf,
                    "  <rect class=\"wall\" x=\"%.2f\" y=\"%.2f\" "
                    "width=\"%.2f\" height=\"%.2f\"/>\n",
                    x0, y0, (run - col) * cell_px, cell_px);
      svg << buf;
      col = run;
    }
  }

  // One polyline per vehicle, ids ascending; style classes cycle.
  std::map<int, std::vector<const EpisodeRow*>> by_id;
  for (const EpisodeRow& r : log.rows) by_id[r.id].push_back(&r);
  int slot = 0;
  for (const auto& [id, rows] : by_id) {
    std::snprintf(buf, sizeof buf, "  <polyline class=\"traj veh%d\" points=\"",
                  slot % 6);
    svg << buf;
    for (size_t i = 0; i < rows.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "",
                    px(rows[i]->x), py(rows[i]->y));
      svg << buf;
    }
    svg << "\"/>\n";
    ++slot;
  }

  // Cross marker where a vehicle first shows up collided.
  for (const auto& [id, rows] : by_id) {
    for (size_t i = 0; i < rows.size(); ++i) {
      if (!rows[i]->collided) continue;
      double cx = px(rows[i]->x), cy = py(rows[i]->y);
      std::snprintf(buf, sizeof buf,
                    "  <path class=\"crash\" d=\"M %.2f %.2f L %.2f %.2f "
                    "M %.2f %.2f L %.2f %.2f\"/>\n",
                    cx - 6, cy - 6, cx + 6, cy + 6, cx - 6, cy + 6, cx + 6,
                    cy - 6);
      svg << buf;
      break;
    }
  }
  svg << "</svg>\n";

  std::ofstream out(out_svg);
  if (!out) throw ParseError("cannot write plot: " + out_svg);
  out << svg.str();
  out.close();
  if (!out) throw ParseError("short write on plot: " + out_svg);
}

}  // namespace chicane
