#include "chicane/monitor.hpp"

#include <cmath>
#include <string>

#include "chicane/raycast.hpp"
#include "doctest.h"
#include "support/test_grids.hpp"

using namespace chicane;

namespace {

World corridor_world() {
  // 10 x 3 m corridor, open along x.
  World w;
  w.grid = test_grids::empty_grid(200, 60, 0.05);
  test_grids::add_border(w.grid);
  return w;
}

LaserScan flat_scan(int beams, double range) {
  LaserScan s;
  s.angle_min = -kPi / 2;
  s.angle_max = kPi / 2;
  s.range_max = 10.0;
  s.ranges.assign(beams, range);
  return s;
}

}  // namespace

TEST_CASE("monitor names match the log vocabulary") {
  CHECK(std::string(monitor_kind_name(MonitorKind::kMinClearance)) ==
        "MIN_CLEARANCE");
  CHECK(std::string(monitor_kind_name(MonitorKind::kMaxSpeed)) == "MAX_SPEED");
  CHECK(std::string(monitor_kind_name(MonitorKind::kOnTrack)) == "ON_TRACK");
  CHECK(std::string(monitor_kind_name(MonitorKind::kMutualExclusion)) ==
        "MUTUAL_EXCLUSION");
  CHECK(std::string(severity_name(Severity::kWarn)) == "WARN");
  CHECK(std::string(severity_name(Severity::kFailsafe)) == "FAILSAFE");
}

TEST_CASE("clearance monitor compares the minimum beam against the limit") {
  World w = corridor_world();
  w.add_vehicle(0, {{2, 1.5, 0}, 1.0, 0.0}, VehicleParams{});
  w.time = 3.5;

  MonitorSpec spec;
  spec.name = "clear";
  spec.kind = MonitorKind::kMinClearance;
  spec.limit = 0.3;

  std::map<int, LaserScan> scans;
  scans[0] = flat_scan(11, 0.5);
  scans[0].ranges[4] = 0.5;  // min is 0.5

  CHECK(check({spec}, w, scans).empty());

  scans[0].ranges[7] = 0.25;
  auto v = check({spec}, w, scans);
  REQUIRE(v.size() == 1);
  CHECK(v[0].monitor == "clear");
  CHECK(v[0].vehicle_id == 0);
  CHECK(v[0].time == 3.5);
  CHECK(v[0].measured == 0.25);

  SUBCASE("vehicles without a scan are skipped") {
    w.add_vehicle(1, {{4, 1.5, 0}, 1.0, 0.0}, VehicleParams{});
    auto again = check({spec}, w, scans);
    REQUIRE(again.size() == 1);
    CHECK(again[0].vehicle_id == 0);
  }
}

TEST_CASE("speed monitor uses ground truth and a strict threshold") {
  World w = corridor_world();
  w.add_vehicle(0, {{2, 1.5, 0}, 5.0, 0.0}, VehicleParams{});
  w.add_vehicle(1, {{4, 1.5, 0}, 4.0, 0.0}, VehicleParams{});

  MonitorSpec spec;
  spec.name = "speed";
  spec.kind = MonitorKind::kMaxSpeed;
  spec.limit = 4.0;

  auto v = check({spec}, w, {});
  REQUIRE(v.size() == 1);  // exactly at the limit is fine
  CHECK(v[0].vehicle_id == 0);
  CHECK(v[0].measured == 5.0);
}

TEST_CASE("on-track monitor flags footprints that overlap walls") {
  World w = corridor_world();
  w.add_vehicle(0, {{2, 1.5, 0}, 0.0, 0.0}, VehicleParams{});     // free
  w.add_vehicle(1, {{4, 0.05, 0}, 0.0, 0.0}, VehicleParams{});    // in wall

  MonitorSpec spec;
  spec.name = "track";
  spec.kind = MonitorKind::kOnTrack;

  auto v = check({spec}, w, {});
  REQUIRE(v.size() == 1);
  CHECK(v[0].vehicle_id == 1);
}

TEST_CASE("mutual exclusion names every occupant once over capacity") {
  World w = corridor_world();
  MonitorSpec spec;
  spec.name = "zone";
  spec.kind = MonitorKind::kMutualExclusion;
  spec.zone.center = {5, 1.5, 0};
  spec.zone.entry_radius = 1.0;
  spec.zone.capacity = 1;

  w.add_vehicle(0, {{4.5, 1.5, 0}, 1.0, 0.0}, VehicleParams{});
  CHECK(check({spec}, w, {}).empty());  // one occupant is allowed

  w.add_vehicle(1, {{5.5, 1.5, 0}, 1.0, 0.0}, VehicleParams{});
  w.add_vehicle(2, {{8.0, 1.5, 0}, 1.0, 0.0}, VehicleParams{});  // outside
  auto v = check({spec}, w, {});
  REQUIRE(v.size() == 2);
  CHECK(v[0].vehicle_id == 0);
  CHECK(v[1].vehicle_id == 1);
  CHECK(v[0].measured == 2.0);

  SUBCASE("capacity two tolerates the pair") {
    MonitorSpec wide = spec;
    wide.zone.capacity = 2;
    CHECK(check({wide}, w, {}).empty());
  }
}

TEST_CASE("checking is pure and deterministically ordered") {
  World w = corridor_world();
  w.add_vehicle(0, {{2, 1.5, 0}, 9.0, 0.0}, VehicleParams{});
  w.add_vehicle(1, {{4, 1.5, 0}, 8.0, 0.0}, VehicleParams{});

  MonitorSpec fast;
  fast.name = "fast";
  fast.kind = MonitorKind::kMaxSpeed;
  fast.limit = 5.0;
  MonitorSpec faster = fast;
  faster.name = "faster";
  faster.limit = 1.0;

  auto a = check({fast, faster}, w, {});
  auto b = check({fast, faster}, w, {});
  REQUIRE(a.size() == 4);  // both specs, both vehicles
  CHECK(a[0].monitor == "fast");
  CHECK(a[0].vehicle_id == 0);
  CHECK(a[1].monitor == "fast");
  CHECK(a[1].vehicle_id == 1);
  CHECK(a[2].monitor == "faster");
  CHECK(a[3].monitor == "faster");
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].monitor == b[i].monitor);
    CHECK(a[i].vehicle_id == b[i].vehicle_id);
    CHECK(a[i].measured == b[i].measured);
  }
}

TEST_CASE("failsafe zeroes speed only for the named vehicle") {
  ControlCommand cmd{2.0, 0.7};

  CHECK(apply_failsafe(cmd, 0, {}).speed == 2.0);

  Violation warn{"w", Severity::kWarn, 0, 0.0, 9.0};
  CHECK(apply_failsafe(cmd, 0, {warn}).speed == 2.0);  // logged, not enforced

  Violation hard{"h", Severity::kFailsafe, 0, 0.0, 9.0};
  ControlCommand out = apply_failsafe(cmd, 0, {warn, hard});
  CHECK(out.speed == 0.0);
  CHECK(out.kappa == 0.7);  // steering is left alone

  CHECK(apply_failsafe(cmd, 1, {hard}).speed == 2.0);  // other vehicle
}

TEST_CASE("clearance failsafe keeps a vehicle off the wall in closed loop") {
  // Head-on approach to the far wall. Braking is one step (decel >= v/dt),
  // so the floor is the limit minus two steps of travel: one step of
  // detection latency plus one step of command application.
  World w = corridor_world();
  VehicleParams params;
  params.decel_max = 200.0;
  w.add_vehicle(0, {{2, 1.5, 0}, 0.0, 0.0}, params);

  MonitorSpec spec;
  spec.name = "clear";
  spec.kind = MonitorKind::kMinClearance;
  spec.severity = Severity::kFailsafe;
  spec.limit = 0.4;

  ScanConfig sc;
  sc.beam_count = 61;
  sc.range_max = 10.0;
  NoiseConfig quiet;
  Rng rng(1);
  const double dt = 0.02;
  const double cruise = 2.0;

  auto drive = [&](Severity sev) {
    World world = w;
    MonitorSpec s = spec;
    s.severity = sev;
    double min_seen = 1e9;
    for (int i = 0; i < 500; ++i) {
      LaserScan scan = sense(world, 0, sc, quiet, rng);
      double lo =
          *std::min_element(scan.ranges.begin(), scan.ranges.end());
      min_seen = std::min(min_seen, lo);
      std::map<int, LaserScan> scans{{0, scan}};
      auto violations = check({s}, world, scans);
      ControlCommand cmd =
          apply_failsafe(ControlCommand{cruise, 0.0}, 0, violations);
      step_world(world, {{0, cmd}}, dt);
    }
    return min_seen;
  };

  double floor_failsafe = drive(Severity::kFailsafe);
  CHECK(floor_failsafe >= spec.limit - 2.0 * cruise * dt);

  // Contrast: with WARN severity nothing stops the vehicle, so the limit
  // is actually crossed -- the failsafe above is what held the floor.
  double floor_warn = drive(Severity::kWarn);
  CHECK(floor_warn < spec.limit - 2.0 * cruise * dt);
}
