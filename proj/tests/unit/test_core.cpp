#include "chicane/core.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "chicane/errors.hpp"
#include "chicane/rng.hpp"
#include "doctest.h"

using namespace chicane;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / name;
}

// Independent PGM/metadata writer used to exercise the loader.
void write_pgm(const fs::path& p, int w, int h,
               const std::vector<unsigned char>& pix) {
  std::ofstream f(p, std::ios::binary);
  f << "P5\n" << w << " " << h << "\n255\n";
  f.write(reinterpret_cast<const char*>(pix.data()),
          static_cast<std::streamsize>(pix.size()));
}

void write_meta(const fs::path& p, double res, double ox, double oy,
                double oth, double thresh, int negate) {
  std::ofstream f(p);
  f << "resolution: " << res << "\n";
  f << "origin: " << ox << " " << oy << " " << oth << "\n";
  f << "occupied_thresh: " << thresh << "\n";
  f << "negate: " << negate << "\n";
}

}  // namespace

TEST_CASE("wrap_angle maps into (-pi, pi]") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));  // -pi is excluded
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi + 0.1) == doctest::Approx(-kPi + 0.1));
  CHECK(wrap_angle(-2.5 * kPi) == doctest::Approx(-0.5 * kPi));
  // In-range angles pass through exactly.
  CHECK(wrap_angle(0.5) == 0.5);
  CHECK(wrap_angle(-3.0) == -3.0);
}

TEST_CASE("angle_diff takes the short way around") {
  CHECK(angle_diff(0.1, -0.1) == doctest::Approx(0.2));
  CHECK(angle_diff(-3.0, 3.0) == doctest::Approx(2.0 * kPi - 6.0));
}

TEST_CASE("frame transforms: identity and quarter turn") {
  Pose2D p{1.0, 2.0, 0.5};
  Pose2D same = to_local_frame({0, 0, 0}, p);
  CHECK(same.x == doctest::Approx(1.0));
  CHECK(same.y == doctest::Approx(2.0));
  CHECK(same.theta == doctest::Approx(0.5));

  // Frame at (1,1) facing +y; a point 1m along its +x axis.
  Pose2D local = to_local_frame({1, 1, kPi / 2}, {1, 2, kPi / 2});
  CHECK(local.x == doctest::Approx(1.0));
  CHECK(local.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(local.theta == doctest::Approx(0.0));
}

TEST_CASE("to_local_frame / from_local_frame round trip") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    Pose2D frame{rng.uniform(-50, 50), rng.uniform(-50, 50),
                 rng.uniform(-kPi, kPi)};
    Pose2D p{rng.uniform(-50, 50), rng.uniform(-50, 50),
             rng.uniform(-kPi, kPi)};
    Pose2D back = from_local_frame(frame, to_local_frame(frame, p));
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
    CHECK(std::abs(wrap_angle(back.theta - p.theta)) < 1e-9);
  }
}

TEST_CASE("compose matches chaining transforms") {
  Pose2D a{2, -1, 0.7}, b{0.5, 0.25, -0.3};
  Pose2D ab = compose(a, b);
  // Composing then expressing b back in a's frame recovers b.
  Pose2D back = to_local_frame(a, ab);
  CHECK(back.x == doctest::Approx(b.x));
  CHECK(back.y == doctest::Approx(b.y));
  CHECK(back.theta == doctest::Approx(b.theta));
}

TEST_CASE("grid index transforms") {
  OccupancyGrid g;
  g.width = 100;
  g.height = 80;
  g.resolution = 0.05;
  g.cells.assign(8000, 0.0f);

  auto cell = g.world_to_grid(0.07, 0.12);
  REQUIRE(cell.has_value());
  CHECK(cell->col == 1);
  CHECK(cell->row == 2);

  Vec2 center = g.grid_to_world(1, 2);
  CHECK(center.x == doctest::Approx(0.075));
  CHECK(center.y == doctest::Approx(0.125));

  CHECK_FALSE(g.world_to_grid(-0.01, 0.5).has_value());
  CHECK_FALSE(g.world_to_grid(5.01, 0.5).has_value());

  SUBCASE("cell centers round trip exactly") {
    g.origin = {3.2, -1.7, 0.0};
    for (int row : {0, 17, 79})
      for (int col : {0, 42, 99}) {
        Vec2 c = g.grid_to_world(col, row);
        auto back = g.world_to_grid(c.x, c.y);
        REQUIRE(back.has_value());
        CHECK(back->col == col);
        CHECK(back->row == row);
      }
  }

  SUBCASE("rotated origin") {
    g.origin = {1.0, 1.0, kPi / 2};
    // Grid +x is world +y: a point 0.075 up from origin is col 1, row 0.
    auto c = g.world_to_grid(1.0 - 0.025, 1.0 + 0.075);
    REQUIRE(c.has_value());
    CHECK(c->col == 1);
    CHECK(c->row == 0);
  }
}

TEST_CASE("load_map reads PGM + metadata") {
  auto pgm = temp_file("chicane_test_map.pgm");
  auto meta = temp_file("chicane_test_map.meta");
  write_pgm(pgm, 2, 2, {255, 0, 127, 255});
  write_meta(meta, 0.05, 1.0, -2.0, 0.0, 0.65, 0);

  OccupancyGrid g = load_map(pgm.string(), meta.string());
  CHECK(g.width == 2);
  CHECK(g.height == 2);
  CHECK(g.resolution == doctest::Approx(0.05));
  CHECK(g.origin.x == doctest::Approx(1.0));
  CHECK(g.origin.y == doctest::Approx(-2.0));
  CHECK(g.at(0, 0) == doctest::Approx(0.0));        // white = free
  CHECK(g.at(1, 0) == doctest::Approx(1.0));        // black = occupied
  CHECK(g.at(0, 1) == doctest::Approx(128.0 / 255.0));
  CHECK(g.occupied(1, 0));
  CHECK_FALSE(g.occupied(0, 0));

  SUBCASE("negate flips the mapping") {
    write_meta(meta, 0.05, 0, 0, 0, 0.65, 1);
    OccupancyGrid inv = load_map(pgm.string(), meta.string());
    CHECK(inv.at(0, 0) == doctest::Approx(1.0));
    CHECK(inv.at(1, 0) == doctest::Approx(0.0));
  }

  fs::remove(pgm);
  fs::remove(meta);
}

TEST_CASE("load_map rejects bad input") {
  auto pgm = temp_file("chicane_bad_map.pgm");
  auto meta = temp_file("chicane_bad_map.meta");
  write_meta(meta, 0.05, 0, 0, 0, 0.65, 0);

  SUBCASE("wrong magic") {
    std::ofstream f(pgm, std::ios::binary);
    f << "P2\n2 2\n255\n0 0 0 0\n";
    f.close();
    CHECK_THROWS_AS(load_map(pgm.string(), meta.string()), MalformedHeader);
  }
  SUBCASE("truncated pixel data") {
    write_pgm(pgm, 4, 4, {1, 2, 3});  // header says 16 bytes
    CHECK_THROWS_AS(load_map(pgm.string(), meta.string()), DimensionMismatch);
  }
  SUBCASE("threshold outside (0,1)") {
    write_pgm(pgm, 2, 2, {255, 255, 255, 255});
    write_meta(meta, 0.05, 0, 0, 0, 1.5, 0);
    CHECK_THROWS_AS(load_map(pgm.string(), meta.string()), BadThreshold);
  }
  SUBCASE("missing resolution") {
    write_pgm(pgm, 2, 2, {255, 255, 255, 255});
    std::ofstream f(meta);
    f << "origin: 0 0 0\n";
    f.close();
    CHECK_THROWS_AS(load_map(pgm.string(), meta.string()), MalformedHeader);
  }

  fs::remove(pgm);
  fs::remove(meta);
}

TEST_CASE("waypoint CSV loader") {
  auto csv = temp_file("chicane_waypoints.csv");
  {
    std::ofstream f(csv);
    f << "# a loop\n";
    f << "0.0, 0.0, 1.5\n";
    f << "1.0, 0.0, 2.0\n";
    f << "\n";
    f << "1.0, 1.0, 2.0\n";
  }
  WaypointPath path = load_waypoints(csv.string(), true);
  REQUIRE(path.points.size() == 3);
  CHECK(path.closed);
  CHECK(path.points[0].speed == doctest::Approx(1.5));
  CHECK(path.points[2].y == doctest::Approx(1.0));
  CHECK(path.segment_count() == 3);  // wraps

  SUBCASE("open path has one fewer segment") {
    WaypointPath open = load_waypoints(csv.string(), false);
    CHECK(open.segment_count() == 2);
  }
  SUBCASE("malformed row") {
    std::ofstream f(csv);
    f << "1.0, 2.0\n2.0, 3.0\n";
    f.close();
    CHECK_THROWS_AS(load_waypoints(csv.string(), false), ParseError);
  }
  SUBCASE("negative speed") {
    std::ofstream f(csv);
    f << "0, 0, -1\n1, 0, 1\n";
    f.close();
    CHECK_THROWS_AS(load_waypoints(csv.string(), false), ParseError);
  }
  SUBCASE("single point") {
    std::ofstream f(csv);
    f << "0, 0, 1\n";
    f.close();
    CHECK_THROWS_AS(load_waypoints(csv.string(), false), EmptyPath);
  }
  fs::remove(csv);
}

TEST_CASE("path geometry helpers") {
  WaypointPath square;
  square.closed = true;
  square.points = {{0, 0, 1}, {2, 0, 2}, {2, 2, 3}, {0, 2, 4}};
  CHECK(path_length(square) == doctest::Approx(8.0));

  PathPoint cp = closest_point_on_path(square, 1.0, -0.5);
  CHECK(cp.segment == 0);
  CHECK(cp.t == doctest::Approx(0.5));
  CHECK(cp.position.y == doctest::Approx(0.0));
  CHECK(cp.distance == doctest::Approx(0.5));

  Vec2 pos;
  double th;
  point_at_arc(square, 3.0, &pos, &th);  // 1m up the right edge
  CHECK(pos.x == doctest::Approx(2.0));
  CHECK(pos.y == doctest::Approx(1.0));
  CHECK(th == doctest::Approx(kPi / 2));
  point_at_arc(square, 8.0 + 3.0, &pos, &th);  // closed: wraps
  CHECK(pos.x == doctest::Approx(2.0));
  CHECK(pos.y == doctest::Approx(1.0));

  CHECK(speed_at(square, 0, 0.5) == doctest::Approx(1.5));
}

TEST_CASE("oriented boxes: overlap, distance, grid collision") {
  Obb a = footprint_obb({0, 0, 0}, 0.5, 0.3);
  Obb b = footprint_obb({0.45, 0, 0}, 0.5, 0.3);  // overlaps along x
  Obb c = footprint_obb({1.2, 0, 0}, 0.5, 0.3);
  CHECK(obb_overlap(a, b));
  CHECK_FALSE(obb_overlap(a, c));

  // Rotating the distant box 45 degrees shouldn't create contact...
  Obb d = footprint_obb({1.2, 0, kPi / 4}, 0.5, 0.3);
  CHECK_FALSE(obb_overlap(a, d));
  // ...but a long thin box slicing past the corner should touch: its line
  // x + y = 0.3 passes 0.21 from the center, inside a's 0.28 corner reach.
  Obb e = footprint_obb({0.15, 0.15, -kPi / 4}, 1.6, 0.05);
  CHECK(obb_overlap(a, e));

  CHECK(obb_distance(a, 0.1, 0.05) == doctest::Approx(0.0));  // inside
  CHECK(obb_distance(a, 1.25, 0.0) == doctest::Approx(1.0));
  CHECK(obb_distance(a, 0.25, 0.65) == doctest::Approx(0.5));

  OccupancyGrid g;
  g.width = g.height = 40;
  g.resolution = 0.05;
  g.cells.assign(1600, 0.0f);
  for (int r = 0; r < 40; ++r) g.cells[r * 40 + 20] = 1.0f;  // wall at x~1m

  CHECK_FALSE(obb_hits_grid(g, footprint_obb({0.5, 1.0, 0}, 0.5, 0.3)));
  CHECK(obb_hits_grid(g, footprint_obb({0.95, 1.0, 0}, 0.5, 0.3)));
  // Off the grid counts as a hit.
  CHECK(obb_hits_grid(g, footprint_obb({0.1, 1.0, 0}, 0.5, 0.3)));

  SUBCASE("stamping marks the footprint occupied") {
    OccupancyGrid clean;
    clean.width = clean.height = 40;
    clean.resolution = 0.05;
    clean.cells.assign(1600, 0.0f);
    stamp_obb(clean, footprint_obb({1.0, 1.0, 0.3}, 0.5, 0.3));
    auto cell = clean.world_to_grid(1.0, 1.0);
    REQUIRE(cell.has_value());
    CHECK(clean.occupied(cell->col, cell->row));
    CHECK_FALSE(clean.occupied(0, 0));
  }
}
