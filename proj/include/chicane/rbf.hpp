#pragma once

// Learned stand-in for the boundary-value solver: a Gaussian radial basis
// function network fit over a lattice of solved goals. Training is algebraic
// (one linear solve), so every training point is interpolated exactly up to
// conditioning, and inference is a few hundred kernel evaluations - orders
// of magnitude cheaper than running the optimizer.

#include <string>
#include <vector>

#include "chicane/lattice.hpp"

namespace chicane {

struct RbfDataset {
  std::vector<GoalState> goals;      // solved goals, solver-local frame
  std::vector<SplineParams> params;  // matching solutions
  double a_value = 0.0;              // pinned start curvature of every solve
  int failed = 0;                    // goals the solver could not connect
};

// Solve the BVP for every lattice goal and keep the converged pairs.
// Throws InsufficientData when fewer than 4 goals connect.
RbfDataset build_training_set(const VehicleState& x0,
                              const std::vector<GoalState>& lattice,
                              const BvpOptions& opts);

// Inputs (goal x, y, psi) are mapped per-dimension to [-1, 1] over the
// training range; outputs (s, b, c, d) are z-scored. Weights solve the
// interpolation system Phi * W = Y on the normalized data.
struct RbfNetwork {
  bool trained = false;
  double epsilon = 1.0;  // kernel width: phi(r) = exp(-(epsilon * r)^2)
  double a_value = 0.0;
  bool jittered = false;           // diagonal bump was needed to factor
  double training_residual = 0.0;  // worst relative reconstruction error
  double in_offset[3] = {0, 0, 0};
  double in_scale[3] = {1, 1, 1};
  double out_mean[4] = {0, 0, 0, 0};
  double out_std[4] = {1, 1, 1, 1};
  std::vector<double> centers;  // M x 3, row-major, normalized
  std::vector<double> weights;  // M x 4, row-major

  int size() const { return static_cast<int>(centers.size() / 3); }
};

// epsilon <= 0 picks the width automatically so that epsilon times the
// median nearest-neighbor spacing (normalized space) is 0.4, a kernel a
// couple of lattice cells wide. Throws
// SingularKernel on duplicate goals or a solve that will not reproduce the
// training data.
RbfNetwork train_rbf(const RbfDataset& dataset, double epsilon);

// Spline parameters for a goal pose in the same frame the network was
// trained in. Throws Untrained.
SplineParams infer(const RbfNetwork& net, const Pose2D& goal_pose);

// Connector interface matching bvp_connector, for drop-in use in plan_step.
// The goal's boundary curvature field is ignored; d comes from the model.
TrajectoryConnector rbf_connector(const RbfNetwork& net);

// Worst-case endpoint error over test goals: each inferred spline is rolled
// out and its endpoint compared against the goal, with position error scaled
// by the trained input extent and heading error by pi. Returns the max of
// the per-goal error norms (0 for an empty list).
double test_error(const RbfNetwork& net, const std::vector<Pose2D>& goals,
                  int n_steps = 128);

// Fixed-layout binary persistence; a round trip is bit-exact. load_rbf
// throws ParseError on garbage and VersionMismatch on a foreign version.
void save_rbf(const RbfNetwork& net, const std::string& path);
RbfNetwork load_rbf(const std::string& path);

}  // namespace chicane
