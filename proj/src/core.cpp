#include "chicane/core.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include "chicane/errors.hpp"

namespace chicane {

std::optional<CellIndex> OccupancyGrid::world_to_grid(double x, double y) const {
  double c = std::cos(origin.theta), s = std::sin(origin.theta);
  double dx = x - origin.x, dy = y - origin.y;
  double lx = c * dx + s * dy;
  double ly = -s * dx + c * dy;
  int col = static_cast<int>(std::floor(lx / resolution));
  int row = static_cast<int>(std::floor(ly / resolution));
  if (!in_bounds(col, row)) return std::nullopt;
  return CellIndex{col, row};
}

Vec2 OccupancyGrid::grid_to_world(int col, int row) const {
  double lx = (col + 0.5) * resolution;
  double ly = (row + 0.5) * resolution;
  double c = std::cos(origin.theta), s = std::sin(origin.theta);
  return {origin.x + c * lx - s * ly, origin.y + s * lx + c * ly};
}

double path_length(const WaypointPath& path) {
  double total = 0.0;
  for (int i = 0; i < path.segment_count(); ++i) {
    Vec2 a = path.segment_start(i), b = path.segment_end(i);
    total += std::hypot(b.x - a.x, b.y - a.y);
  }
  return total;
}

PathPoint closest_point_on_path(const WaypointPath& path, double x, double y) {
  if (path.segment_count() == 0) throw EmptyPath("path has fewer than 2 points");
  PathPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int i = 0; i < path.segment_count(); ++i) {
    Vec2 a = path.segment_start(i), b = path.segment_end(i);
    double vx = b.x - a.x, vy = b.y - a.y;
    double len2 = vx * vx + vy * vy;
    double t = 0.0;
    if (len2 > 0.0)
      t = std::clamp(((x - a.x) * vx + (y - a.y) * vy) / len2, 0.0, 1.0);
    double px = a.x + t * vx, py = a.y + t * vy;
    double d = std::hypot(x - px, y - py);
    if (d < best.distance) {
      best = {i, t, {px, py}, d};
    }
  }
  return best;
}

void point_at_arc(const WaypointPath& path, double arc, Vec2* pos,
                  double* tangent_theta) {
  int n = path.segment_count();
  if (n == 0) throw EmptyPath("path has fewer than 2 points");
  double total = path_length(path);
  if (path.closed) {
    arc = std::fmod(arc, total);
    if (arc < 0.0) arc += total;
  } else {
    arc = std::clamp(arc, 0.0, total);
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    Vec2 a = path.segment_start(i), b = path.segment_end(i);
    double len = std::hypot(b.x - a.x, b.y - a.y);
    if (arc <= acc + len || i == n - 1) {
      double t = len > 0.0 ? (arc - acc) / len : 0.0;
      t = std::clamp(t, 0.0, 1.0);
      if (pos) *pos = {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
      if (tangent_theta) *tangent_theta = std::atan2(b.y - a.y, b.x - a.x);
      return;
    }
    acc += len;
  }
}

double speed_at(const WaypointPath& path, int segment, double t) {
  const Waypoint& a = path.points[segment];
  const Waypoint& b = path.points[(segment + 1) % path.points.size()];
  return a.speed + t * (b.speed - a.speed);
}

Obb footprint_obb(const Pose2D& pose, double length, double width) {
  return {pose.x,       pose.y,          std::cos(pose.theta),
          std::sin(pose.theta), length * 0.5, width * 0.5};
}

namespace {

// Half-extent of a box projected onto a unit axis.
double projected_radius(const Obb& b, double ax, double ay) {
  return b.half_length * std::abs(ax * b.c + ay * b.s) +
         b.half_width * std::abs(-ax * b.s + ay * b.c);
}

bool separated_on_axis(const Obb& a, const Obb& b, double ax, double ay) {
  double dist = std::abs((b.cx - a.cx) * ax + (b.cy - a.cy) * ay);
  return dist > projected_radius(a, ax, ay) + projected_radius(b, ax, ay);
}

}  // namespace

bool obb_overlap(const Obb& a, const Obb& b) {
  // Separating-axis test over both boxes' edge normals.
  return !(separated_on_axis(a, b, a.c, a.s) ||
           separated_on_axis(a, b, -a.s, a.c) ||
           separated_on_axis(a, b, b.c, b.s) ||
           separated_on_axis(a, b, -b.s, b.c));
}

namespace {

// Cells whose squares might touch the obb, clamped to the grid; returns false
// if any part of the obb's bounding box falls off the grid (callers treat
// off-grid as occupied).
bool obb_cell_range(const OccupancyGrid& grid, const Obb& obb, int* col0,
                    int* row0, int* col1, int* row1, bool* off_grid) {
  double exx = obb.half_length * std::abs(obb.c) + obb.half_width * std::abs(obb.s);
  double exy = obb.half_length * std::abs(obb.s) + obb.half_width * std::abs(obb.c);
  // Work in the grid frame so rotated map origins stay correct.
  Pose2D local = to_local_frame(grid.origin, {obb.cx, obb.cy, 0.0});
  // Conservative: use the axis-aligned extent in both frames' worst case.
  double ex = std::hypot(exx, exy);
  *col0 = static_cast<int>(std::floor((local.x - ex) / grid.resolution));
  *row0 = static_cast<int>(std::floor((local.y - ex) / grid.resolution));
  *col1 = static_cast<int>(std::floor((local.x + ex) / grid.resolution));
  *row1 = static_cast<int>(std::floor((local.y + ex) / grid.resolution));
  *off_grid = *col0 < 0 || *row0 < 0 || *col1 >= grid.width || *row1 >= grid.height;
  *col0 = std::max(*col0, 0);
  *row0 = std::max(*row0, 0);
  *col1 = std::min(*col1, grid.width - 1);
  *row1 = std::min(*row1, grid.height - 1);
  return true;
}

Obb cell_obb(const OccupancyGrid& grid, int col, int row) {
  Vec2 c = grid.grid_to_world(col, row);
  double ct = std::cos(grid.origin.theta), st = std::sin(grid.origin.theta);
  return {c.x, c.y, ct, st, grid.resolution * 0.5, grid.resolution * 0.5};
}

}  // namespace

bool obb_hits_grid(const OccupancyGrid& grid, const Obb& obb) {
  int col0, row0, col1, row1;
  bool off_grid;
  obb_cell_range(grid, obb, &col0, &row0, &col1, &row1, &off_grid);
  if (off_grid) {
    // The conservative bounding box leaves the grid; check the actual corners
    // before declaring a hit.
    double corners[4][2];
    double lx[4] = {obb.half_length, obb.half_length, -obb.half_length, -obb.half_length};
    double lw[4] = {obb.half_width, -obb.half_width, obb.half_width, -obb.half_width};
    for (int i = 0; i < 4; ++i) {
      corners[i][0] = obb.cx + obb.c * lx[i] - obb.s * lw[i];
      corners[i][1] = obb.cy + obb.s * lx[i] + obb.c * lw[i];
    }
    for (auto& corner : corners)
      if (!grid.world_to_grid(corner[0], corner[1])) return true;
  }
  for (int row = row0; row <= row1; ++row)
    for (int col = col0; col <= col1; ++col)
      if (grid.occupied(col, row) && obb_overlap(obb, cell_obb(grid, col, row)))
        return true;
  return false;
}

double obb_distance(const Obb& obb, double x, double y) {
  double dx = x - obb.cx, dy = y - obb.cy;
  double lx = obb.c * dx + obb.s * dy;
  double ly = -obb.s * dx + obb.c * dy;
  double ex = std::max(std::abs(lx) - obb.half_length, 0.0);
  double ey = std::max(std::abs(ly) - obb.half_width, 0.0);
  return std::hypot(ex, ey);
}

void stamp_obb(OccupancyGrid& grid, const Obb& obb) {
  int col0, row0, col1, row1;
  bool off_grid;
  obb_cell_range(grid, obb, &col0, &row0, &col1, &row1, &off_grid);
  for (int row = row0; row <= row1; ++row)
    for (int col = col0; col <= col1; ++col)
      if (obb_overlap(obb, cell_obb(grid, col, row)))
        grid.cells[static_cast<size_t>(row) * grid.width + col] = 1.0f;
}

namespace {

// Read the next PGM header token, skipping whitespace and '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int pgm_int(std::istream& in, const char* what) {
  std::string tok = pgm_token(in);
  try {
    size_t used = 0;
    int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw MalformedHeader(std::string("bad PGM ") + what + ": '" + tok + "'");
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

OccupancyGrid load_map(const std::string& pgm_path,
                       const std::string& meta_path) {
  std::ifstream pgm(pgm_path, std::ios::binary);
  if (!pgm) throw MapLoadError("cannot open map image: " + pgm_path);
  if (pgm_token(pgm) != "P5")
    throw MalformedHeader("map image is not binary PGM (P5): " + pgm_path);
  int width = pgm_int(pgm, "width");
  int height = pgm_int(pgm, "height");
  int maxval = pgm_int(pgm, "maxval");
  if (width <= 0 || height <= 0)
    throw MalformedHeader("non-positive PGM dimensions");
  if (maxval != 255)
    throw MalformedHeader("expected 8-bit PGM (maxval 255), got " +
                          std::to_string(maxval));
  // The header's final token is followed by exactly one whitespace byte,
  // already consumed by pgm_int; pixel data starts here.
  std::vector<unsigned char> pixels(static_cast<size_t>(width) * height);
  pgm.read(reinterpret_cast<char*>(pixels.data()),
           static_cast<std::streamsize>(pixels.size()));
  if (static_cast<size_t>(pgm.gcount()) != pixels.size())
    throw DimensionMismatch("PGM pixel data shorter than header dimensions");

  std::ifstream meta(meta_path);
  if (!meta) throw MapLoadError("cannot open map metadata: " + meta_path);
  OccupancyGrid grid;
  grid.width = width;
  grid.height = height;
  bool have_resolution = false;
  int negate = 0;
  std::string line;
  while (std::getline(meta, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    size_t colon = line.find(':');
    if (colon == std::string::npos)
      throw MalformedHeader("metadata line missing ':': " + line);
    std::string key = trim(line.substr(0, colon));
    std::string value = trim(line.substr(colon + 1));
    // Tolerate bracketed origin lists by flattening the punctuation.
    for (char& ch : value)
      if (ch == '[' || ch == ']' || ch == ',') ch = ' ';
    std::istringstream vs(value);
    if (key == "resolution") {
      if (!(vs >> grid.resolution) || grid.resolution <= 0.0)
        throw MalformedHeader("bad resolution: " + value);
      have_resolution = true;
    } else if (key == "origin") {
      if (!(vs >> grid.origin.x >> grid.origin.y >> grid.origin.theta))
        throw MalformedHeader("origin needs three numbers: " + value);
      grid.origin.theta = wrap_angle(grid.origin.theta);
    } else if (key == "occupied_thresh") {
      if (!(vs >> grid.occupied_threshold))
        throw MalformedHeader("bad occupied_thresh: " + value);
    } else if (key == "negate") {
      if (!(vs >> negate) || (negate != 0 && negate != 1))
        throw MalformedHeader("negate must be 0 or 1: " + value);
    }
    // Unknown keys (e.g. "image") are ignored.
  }
  if (!have_resolution) throw MalformedHeader("metadata missing resolution");
  if (grid.occupied_threshold <= 0.0 || grid.occupied_threshold >= 1.0)
    throw BadThreshold("occupied_thresh must be in (0, 1), got " +
                       std::to_string(grid.occupied_threshold));

  grid.cells.resize(pixels.size());
  for (size_t i = 0; i < pixels.size(); ++i) {
    double p = pixels[i];
    grid.cells[i] = static_cast<float>(negate ? p / 255.0 : (255.0 - p) / 255.0);
  }
  return grid;
}

WaypointPath load_waypoints(const std::string& csv_path, bool closed) {
  std::ifstream in(csv_path);
  if (!in) throw ParseError("cannot open waypoint file: " + csv_path);
  WaypointPath path;
  path.closed = closed;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    Waypoint w;
    if (!(ls >> w.x >> w.y >> w.speed))
      throw ParseError("waypoint line " + std::to_string(lineno) +
                       " is not 'x,y,speed': " + line);
    std::string extra;
    if (ls >> extra)
      throw ParseError("waypoint line " + std::to_string(lineno) +
                       " has trailing fields: " + line);
    if (w.speed < 0.0)
      throw ParseError("waypoint line " + std::to_string(lineno) +
                       " has negative speed");
    path.points.push_back(w);
  }
  if (path.points.size() < 2)
    throw EmptyPath("waypoint file needs at least 2 points: " + csv_path);
  return path;
}

}  // namespace chicane
