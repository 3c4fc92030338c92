#pragma once

// Trajectory generation over a state lattice. Each candidate trajectory is a
// cubic curvature-vs-arc-length polynomial pinned at four equispaced knots;
// the free knot values and the arc length are tuned by a damped Gauss-Newton
// loop until forward integration lands on the requested boundary state.

#include <functional>
#include <optional>
#include <vector>

#include "chicane/core.hpp"

namespace chicane {

// Curvature spline: kappa(u) for u = arc/s is the cubic through knot values
// a, b, c, d at u = 0, 1/3, 2/3, 1. s is the total arc length in meters.
struct SplineParams {
  double s = 1.0;
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
};

// Curvature at arc position s_query in [0, s]. Throws OutOfDomain.
double kappa_at(const SplineParams& p, double s_query);

// Largest |kappa| over the whole spline, from the cubic's critical points.
double max_abs_kappa(const SplineParams& p);

struct TrajectorySample {
  double arc = 0.0;
  Pose2D pose;
  double kappa = 0.0;
};

struct Trajectory {
  SplineParams params;
  VehicleState start;
  std::vector<TrajectorySample> samples;  // n_steps + 1, including both ends
  VehicleState endpoint;
};

// Roll the spline out from x0 with RK4 over arc length.
Trajectory integrate_trajectory(const VehicleState& x0, const SplineParams& p,
                                int n_steps);

struct GoalState {
  Pose2D pose;         // same frame as the start state handed to the solver
  double kappa = 0.0;  // boundary curvature at the goal
};

struct BvpOptions {
  double pos_tol = 1e-3;      // m
  double heading_tol = 1e-3;  // rad
  int max_iters = 60;
  int n_steps = 32;       // integration steps inside the solver
  double fd_step = 1e-4;  // central-difference step for the Jacobian
  int max_halvings = 8;   // step damping attempts per iteration
};

struct BvpResult {
  SplineParams params;
  bool converged = false;
  int iters = 0;
  double pos_residual = 0.0;
  double heading_residual = 0.0;
};

// Solve for the spline connecting x0 to `goal` (pose in x0's frame of
// reference). Boundary curvatures are pinned (a = x0.kappa, d = goal.kappa);
// the optimizer works on (b, c, s). A non-converged result reports the best
// parameters found, flagged. Throws DegenerateGoal when the goal is closer
// than 5cm.
BvpResult solve_bvp(const VehicleState& x0, const GoalState& goal,
                    const BvpOptions& opts);

// Goal lattice: stations along a centerline crossed with lateral offsets.
struct GoalRegion {
  WaypointPath centerline;
  std::vector<double> longitudinal;  // m ahead of the ego's path projection
  std::vector<double> lateral;       // m, signed left of the centerline
  double goal_kappa = 0.0;
};

// Lattice goals in the ego's local frame, longitudinal-major, skipping any
// that land at or behind the ego (local x <= 0).
std::vector<GoalState> sample_goals(const GoalRegion& region,
                                    const Pose2D& ego);

// Euclidean distance (m) to the nearest occupied cell, precomputed over the
// whole grid in one pass. Distances are between cell centers, so values are
// quantized to about half a cell. Queries off the grid return 0.
class DistanceField {
 public:
  explicit DistanceField(const OccupancyGrid& grid);
  double clearance(double x, double y) const;
  double resolution() const { return resolution_; }

 private:
  int width_ = 0;
  int height_ = 0;
  double resolution_ = 1.0;
  Pose2D origin_;
  std::vector<float> dist_;
};

struct CostWeights {
  double w_lat = 1.0;    // endpoint distance from the centerline
  double w_kappa = 0.1;  // peak curvature
  double w_len = 0.05;   // arc length
};

struct EvalConfig {
  CostWeights weights;
  double inflation_radius = 0.25;  // m; closer than this to anything = reject
  double kappa_max = 3.0;
  double v_max = 7.0;
  double a_lat_max = 4.0;  // m/s^2, caps speed through the peak curvature
  int eval_steps = 32;     // integration resolution for candidate rollouts
};

struct Evaluation {
  double cost = 0.0;
  double v_feasible = 0.0;
  double lateral = 0.0;    // endpoint offset from the centerline
  double max_kappa = 0.0;  // peak |kappa| along the spline
};

// Score a rolled-out trajectory; nullopt when it clips an obstacle, a peer
// footprint, leaves the grid, or exceeds kappa_max.
std::optional<Evaluation> evaluate_trajectory(const Trajectory& traj,
                                              const DistanceField& field,
                                              const std::vector<Obb>& peers,
                                              const WaypointPath& centerline,
                                              const EvalConfig& cfg);

// Anything that can produce spline parameters for a local goal: the BVP
// solver, or a learned stand-in for it. nullopt = no connection found.
using TrajectoryConnector =
    std::function<std::optional<SplineParams>(const GoalState&)>;

// Connector backed by solve_bvp from the given start state.
TrajectoryConnector bvp_connector(const VehicleState& x0,
                                  const BvpOptions& opts);

struct PlanResult {
  std::optional<Trajectory> trajectory;  // winner, world frame
  std::optional<Evaluation> evaluation;
  ControlCommand command;  // stop command when no candidate survives
  int goals_sampled = 0;
  int connected = 0;
  int feasible = 0;
};

// One planning cycle: sample the lattice, connect, roll out, score, pick the
// cheapest (ties: smaller lateral offset, then shorter). The command speed is
// the winner's feasible speed; its curvature is sampled a control period
// ahead along the spline.
PlanResult plan_step(const VehicleState& x0, const GoalRegion& region,
                     const DistanceField& field, const std::vector<Obb>& peers,
                     const EvalConfig& cfg, const TrajectoryConnector& connect,
                     double control_dt);

}  // namespace chicane
