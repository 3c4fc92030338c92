#include "chicane/lattice.hpp"

#include <cmath>

#include "chicane/errors.hpp"
#include "chicane/rng.hpp"
#include "doctest.h"
#include "support/test_grids.hpp"

using namespace chicane;

namespace {

// Lagrange interpolation through the four knots; the obvious (slow) way to
// evaluate the same cubic.
double lagrange_kappa(const SplineParams& p, double u) {
  double nodes[4] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
  double vals[4] = {p.a, p.b, p.c, p.d};
  double sum = 0.0;
  for (int i = 0; i < 4; ++i) {
    double term = vals[i];
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      term *= (u - nodes[j]) / (nodes[i] - nodes[j]);
    }
    sum += term;
  }
  return sum;
}

Pose2D arc_endpoint(double kappa, double s) {
  if (std::abs(kappa) < 1e-12) return {s, 0.0, 0.0};
  return {std::sin(kappa * s) / kappa, (1.0 - std::cos(kappa * s)) / kappa,
          wrap_angle(kappa * s)};
}

WaypointPath straight_centerline(double y = 0.0) {
  WaypointPath p;
  p.points = {{-5, y, 2}, {30, y, 2}};
  return p;
}

}  // namespace

TEST_CASE("kappa_at interpolates the knots") {
  SplineParams p{3.0, 0.5, -0.2, 0.8, -0.1};
  CHECK(kappa_at(p, 0.0) == doctest::Approx(0.5));
  CHECK(kappa_at(p, 1.0) == doctest::Approx(-0.2));
  CHECK(kappa_at(p, 2.0) == doctest::Approx(0.8));
  CHECK(kappa_at(p, 3.0) == doctest::Approx(-0.1));

  CHECK_THROWS_AS(kappa_at(p, -0.5), OutOfDomain);
  CHECK_THROWS_AS(kappa_at(p, 3.5), OutOfDomain);
  CHECK_THROWS_AS(kappa_at({-1.0, 0, 0, 0, 0}, 0.0), OutOfDomain);
}

TEST_CASE("kappa_at matches Lagrange interpolation") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    SplineParams p{rng.uniform(0.5, 8.0), rng.uniform(-3, 3),
                   rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
    for (int k = 0; k < 5; ++k) {
      double sq = rng.uniform(0.0, p.s);
      CHECK(kappa_at(p, sq) ==
            doctest::Approx(lagrange_kappa(p, sq / p.s)).epsilon(1e-9));
    }
  }
}

TEST_CASE("max_abs_kappa against dense sampling") {
  Rng rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    SplineParams p{1.0, rng.uniform(-3, 3), rng.uniform(-3, 3),
                   rng.uniform(-3, 3), rng.uniform(-3, 3)};
    double analytic = max_abs_kappa(p);
    double sampled = 0.0;
    for (int i = 0; i <= 2000; ++i)
      sampled = std::max(sampled, std::abs(lagrange_kappa(p, i / 2000.0)));
    CHECK(analytic >= sampled - 1e-9);
    CHECK(analytic <= sampled + 1e-3);  // dense sampling is the lower bound
  }
}

TEST_CASE("integrate_trajectory: straight and constant-curvature rollouts") {
  VehicleState x0;
  x0.v = 2.0;

  SUBCASE("zero curvature goes straight") {
    Trajectory t = integrate_trajectory(x0, {4.0, 0, 0, 0, 0}, 32);
    REQUIRE(t.samples.size() == 33);
    CHECK(t.endpoint.pose.x == doctest::Approx(4.0));
    CHECK(t.endpoint.pose.y == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.endpoint.pose.theta == doctest::Approx(0.0));
    CHECK(t.samples[0].arc == 0.0);
    CHECK(t.samples[0].pose.x == x0.pose.x);
  }
  SUBCASE("constant curvature traces the closed-form arc") {
    double kappa = 0.8, s = 2.5;
    Trajectory t =
        integrate_trajectory(x0, {s, kappa, kappa, kappa, kappa}, 64);
    Pose2D exact = arc_endpoint(kappa, s);
    CHECK(t.endpoint.pose.x == doctest::Approx(exact.x).epsilon(1e-8));
    CHECK(t.endpoint.pose.y == doctest::Approx(exact.y).epsilon(1e-8));
    CHECK(t.endpoint.pose.theta == doctest::Approx(exact.theta).epsilon(1e-8));
    CHECK(t.endpoint.kappa == kappa);
  }
  SUBCASE("start pose carries through") {
    x0.pose = {1.0, -2.0, kPi / 2};
    Trajectory t = integrate_trajectory(x0, {3.0, 0, 0, 0, 0}, 16);
    CHECK(t.endpoint.pose.x == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(t.endpoint.pose.y == doctest::Approx(1.0));
  }
  SUBCASE("arc positions are monotone") {
    Trajectory t = integrate_trajectory(x0, {2.0, 0.1, 0.4, -0.2, 0.3}, 20);
    for (size_t i = 1; i < t.samples.size(); ++i)
      CHECK(t.samples[i].arc > t.samples[i - 1].arc);
  }
}

TEST_CASE("solve_bvp hits simple boundary states") {
  VehicleState x0;
  BvpOptions opts;

  SUBCASE("straight ahead") {
    BvpResult res = solve_bvp(x0, {{2.0, 0.0, 0.0}, 0.0}, opts);
    CHECK(res.converged);
    CHECK(res.params.s == doctest::Approx(2.0).epsilon(0.01));
    CHECK(res.pos_residual < opts.pos_tol);
    CHECK(res.heading_residual < opts.heading_tol);
  }
  SUBCASE("lateral offset with heading change") {
    GoalState goal{{2.0, 1.0, 0.5}, 0.0};
    BvpResult res = solve_bvp(x0, goal, opts);
    REQUIRE(res.converged);
    // Verify against a finer re-integration than the solver used.
    Trajectory t = integrate_trajectory(VehicleState{}, res.params, 128);
    CHECK(std::hypot(t.endpoint.pose.x - 2.0, t.endpoint.pose.y - 1.0) <
          2 * opts.pos_tol);
    CHECK(std::abs(wrap_angle(t.endpoint.pose.theta - 0.5)) <
          2 * opts.heading_tol);
  }
  SUBCASE("boundary curvatures are pinned, not optimized") {
    VehicleState curved;
    curved.kappa = 0.7;
    BvpResult res = solve_bvp(curved, {{2.5, 0.5, 0.0}, -0.3}, opts);
    CHECK(res.params.a == 0.7);
    CHECK(res.params.d == -0.3);
  }
  SUBCASE("goal expressed in the start pose's frame") {
    VehicleState shifted;
    shifted.pose = {10.0, -3.0, kPi / 2};
    // 2m ahead of the start (which faces +y).
    BvpResult res = solve_bvp(shifted, {{10.0, -1.0, kPi / 2}, 0.0}, opts);
    CHECK(res.converged);
    CHECK(res.params.s == doctest::Approx(2.0).epsilon(0.01));
  }
  SUBCASE("degenerate goal") {
    CHECK_THROWS_AS(solve_bvp(x0, {{0.01, 0.0, 0.0}, 0.0}, opts),
                    DegenerateGoal);
  }
}

TEST_CASE("solve_bvp covers a small goal lattice") {
  VehicleState x0;
  BvpOptions opts;
  int converged = 0, total = 0;
  for (double x : {1.0, 2.5, 4.0})
    for (double y : {-1.5, 0.0, 1.5})
      for (double psi : {-0.6, 0.0, 0.6}) {
        ++total;
        BvpResult res = solve_bvp(x0, {{x, y, psi}, 0.0}, opts);
        if (!res.converged) continue;
        ++converged;
        // Arc length stays a sane multiple of the straight-line distance.
        double d = std::hypot(x, y);
        CHECK(res.params.s >= 0.5 * d);
        CHECK(res.params.s <= 4.0 * d);
        Trajectory t = integrate_trajectory(VehicleState{}, res.params, 128);
        CHECK(std::hypot(t.endpoint.pose.x - x, t.endpoint.pose.y - y) <
              2 * opts.pos_tol);
      }
  CHECK(converged >= total - 2);
}

TEST_CASE("sample_goals lays out the lattice in the ego frame") {
  GoalRegion region;
  region.centerline = straight_centerline();
  region.longitudinal = {2.0, 3.0};
  region.lateral = {-0.5, 0.0, 0.5};

  auto goals = sample_goals(region, {0.0, 0.0, 0.0});
  REQUIRE(goals.size() == 6);
  // Longitudinal-major, lateral order as listed; positive lateral is left.
  CHECK(goals[0].pose.x == doctest::Approx(2.0));
  CHECK(goals[0].pose.y == doctest::Approx(-0.5));
  CHECK(goals[1].pose.y == doctest::Approx(0.0));
  CHECK(goals[2].pose.y == doctest::Approx(0.5));
  CHECK(goals[3].pose.x == doctest::Approx(3.0));
  for (const auto& g : goals) CHECK(g.pose.theta == doctest::Approx(0.0));

  SUBCASE("ego offset and heading fold into the local poses") {
    auto off = sample_goals(region, {1.0, 0.2, 0.1});
    REQUIRE(off.size() == 6);
    // Station 2m down the centerline from x=1 is world (3, 0).
    Pose2D world = from_local_frame({1.0, 0.2, 0.1}, off[1].pose);
    CHECK(world.x == doctest::Approx(3.0));
    CHECK(world.y == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("goals behind the ego are dropped") {
    GoalRegion back = region;
    back.longitudinal = {-2.0};
    CHECK(sample_goals(back, {0.0, 0.0, 0.0}).empty());
  }
  SUBCASE("goal curvature is attached") {
    GoalRegion curved = region;
    curved.goal_kappa = 0.4;
    CHECK(sample_goals(curved, {0, 0, 0})[0].kappa == doctest::Approx(0.4));
  }
}

TEST_CASE("DistanceField matches brute-force nearest occupied cell") {
  Rng rng(19);
  for (int trial = 0; trial < 5; ++trial) {
    OccupancyGrid g = test_grids::empty_grid(30, 30, 0.1);
    int boxes = 1 + rng.uniform_int(4);
    for (int b = 0; b < boxes; ++b) {
      int c0 = rng.uniform_int(28), r0 = rng.uniform_int(28);
      test_grids::fill_cells(g, c0, r0, c0 + rng.uniform_int(5),
                             r0 + rng.uniform_int(5));
    }
    DistanceField field(g);
    for (int row = 0; row < 30; ++row)
      for (int col = 0; col < 30; ++col) {
        double best = 1e18;
        for (int r2 = 0; r2 < 30; ++r2)
          for (int c2 = 0; c2 < 30; ++c2)
            if (g.occupied(c2, r2)) {
              double d = std::hypot(double(c2 - col), double(r2 - row)) * 0.1;
              best = std::min(best, d);
            }
        Vec2 center = g.grid_to_world(col, row);
        double got = field.clearance(center.x, center.y);
        if (best < 1e17)
          CHECK(got == doctest::Approx(best).epsilon(1e-6));
        else
          CHECK(got > 100.0);  // empty grid: effectively unbounded
      }
  }

  SUBCASE("off the grid reads zero") {
    OccupancyGrid g = test_grids::empty_grid(10, 10, 0.1);
    DistanceField field(g);
    CHECK(field.clearance(-0.5, 0.5) == 0.0);
    CHECK(field.clearance(0.5, 1.5) == 0.0);
  }
}

TEST_CASE("evaluate_trajectory scores and rejects") {
  // 10m x 5m corridor with 2-cell borders.
  OccupancyGrid g = test_grids::empty_grid(200, 100, 0.05);
  test_grids::add_border(g);
  DistanceField field(g);
  WaypointPath center = straight_centerline(2.5);
  EvalConfig cfg;

  VehicleState x0;
  x0.pose = {1.0, 2.5, 0.0};

  SUBCASE("clean straight run costs only its length") {
    Trajectory t = integrate_trajectory(x0, {2.0, 0, 0, 0, 0}, 32);
    auto ev = evaluate_trajectory(t, field, {}, center, cfg);
    REQUIRE(ev.has_value());
    CHECK(ev->cost == doctest::Approx(cfg.weights.w_len * 2.0));
    CHECK(ev->lateral == doctest::Approx(0.0));
    CHECK(ev->max_kappa == 0.0);
    CHECK(ev->v_feasible == doctest::Approx(cfg.v_max));
  }
  SUBCASE("peak curvature caps feasible speed") {
    SplineParams p{2.0, 1.0, 1.0, 1.0, 1.0};
    Trajectory t = integrate_trajectory(x0, p, 32);
    auto ev = evaluate_trajectory(t, field, {}, center, cfg);
    REQUIRE(ev.has_value());
    CHECK(ev->v_feasible == doctest::Approx(std::sqrt(cfg.a_lat_max / 1.0)));
  }
  SUBCASE("running at the wall is rejected") {
    Trajectory t = integrate_trajectory(x0, {12.0, 0, 0, 0, 0}, 64);
    CHECK_FALSE(evaluate_trajectory(t, field, {}, center, cfg).has_value());
  }
  SUBCASE("between-samples wall clip still rejects via inflation") {
    // Endpoint just inside the far wall's inflation band.
    Trajectory t = integrate_trajectory(x0, {8.85, 0, 0, 0, 0}, 32);
    CHECK_FALSE(evaluate_trajectory(t, field, {}, center, cfg).has_value());
  }
  SUBCASE("over-curvature is rejected") {
    SplineParams p{2.0, 0.0, 3.5, 3.5, 0.0};  // peak above kappa_max = 3
    Trajectory t = integrate_trajectory(x0, p, 32);
    CHECK_FALSE(evaluate_trajectory(t, field, {}, center, cfg).has_value());
  }
  SUBCASE("peer footprint blocks the lane") {
    Obb peer = footprint_obb({2.5, 2.5, 0.0}, 0.5, 0.3);
    Trajectory t = integrate_trajectory(x0, {3.0, 0, 0, 0, 0}, 32);
    CHECK_FALSE(evaluate_trajectory(t, field, {peer}, center, cfg).has_value());
    // The same peer parked in the far corner is irrelevant.
    Obb far_peer = footprint_obb({8.0, 0.8, 0.0}, 0.5, 0.3);
    CHECK(evaluate_trajectory(t, field, {far_peer}, center, cfg).has_value());
  }
}

TEST_CASE("plan_step picks the evading candidate") {
  OccupancyGrid g = test_grids::empty_grid(200, 100, 0.05);
  test_grids::add_border(g);
  WaypointPath center = straight_centerline(2.5);

  GoalRegion region;
  region.centerline = center;
  region.longitudinal = {2.0, 3.0};
  region.lateral = {-0.8, -0.4, 0.0, 0.4, 0.8};

  EvalConfig cfg;
  BvpOptions opts;
  VehicleState x0;
  x0.pose = {1.0, 2.5, 0.0};
  x0.v = 2.0;

  SUBCASE("free corridor: the centerline goal wins the tie") {
    DistanceField field(g);
    PlanResult res =
        plan_step(x0, region, field, {}, cfg, bvp_connector(x0, opts), 0.05);
    CHECK(res.goals_sampled == 10);
    CHECK(res.feasible > 5);
    REQUIRE(res.trajectory.has_value());
    CHECK(res.evaluation->lateral == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(std::abs(res.command.kappa) < 0.05);
    CHECK(res.command.speed > 0.0);
  }
  SUBCASE("block ahead: plan shifts sideways") {
    test_grids::fill_cells(g, 56, 44, 68, 56);  // box at x~3.1, y~2.5
    DistanceField field(g);
    PlanResult res =
        plan_step(x0, region, field, {}, cfg, bvp_connector(x0, opts), 0.05);
    REQUIRE(res.trajectory.has_value());
    double end_y = res.trajectory->endpoint.pose.y;
    CHECK(std::abs(end_y - 2.5) > 0.3);  // a lateral goal won
  }
  SUBCASE("boxed in: stop command") {
    test_grids::fill_cells(g, 30, 2, 40, 97);  // full-height wall just ahead
    DistanceField field(g);
    PlanResult res =
        plan_step(x0, region, field, {}, cfg, bvp_connector(x0, opts), 0.05);
    CHECK_FALSE(res.trajectory.has_value());
    CHECK(res.command.speed == 0.0);
    CHECK(res.feasible == 0);
  }
}
