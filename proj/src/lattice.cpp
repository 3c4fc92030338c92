#include "chicane/lattice.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "chicane/errors.hpp"

namespace chicane {

namespace {

// Power-basis coefficients of the cubic through (0,a) (1/3,b) (2/3,c) (1,d).
struct Cubic {
  double k0, k1, k2, k3;

  explicit Cubic(const SplineParams& p) {
    k0 = p.a;
    k1 = -5.5 * p.a + 9.0 * p.b - 4.5 * p.c + p.d;
    k2 = 9.0 * p.a - 22.5 * p.b + 18.0 * p.c - 4.5 * p.d;
    k3 = -4.5 * p.a + 13.5 * p.b - 13.5 * p.c + 4.5 * p.d;
  }
  double at(double u) const { return ((k3 * u + k2) * u + k1) * u + k0; }
};

}  // namespace

double kappa_at(const SplineParams& p, double s_query) {
  if (p.s <= 0.0) throw OutOfDomain("spline length must be positive");
  double tol = 1e-9 * std::max(1.0, p.s);
  if (s_query < -tol || s_query > p.s + tol)
    throw OutOfDomain("arc position " + std::to_string(s_query) +
                      " outside [0, " + std::to_string(p.s) + "]");
  double u = std::clamp(s_query / p.s, 0.0, 1.0);
  return Cubic(p).at(u);
}

double max_abs_kappa(const SplineParams& p) {
  Cubic q(p);
  double m = std::max(std::abs(q.at(0.0)), std::abs(q.at(1.0)));
  // Interior extrema: roots of the derivative 3*k3*u^2 + 2*k2*u + k1.
  double A = 3.0 * q.k3, B = 2.0 * q.k2, C = q.k1;
  if (std::abs(A) < 1e-300) {
    if (std::abs(B) > 1e-300) {
      double u = -C / B;
      if (u > 0.0 && u < 1.0) m = std::max(m, std::abs(q.at(u)));
    }
    return m;
  }
  double disc = B * B - 4.0 * A * C;
  if (disc < 0.0) return m;
  double sq = std::sqrt(disc);
  for (double u : {(-B - sq) / (2.0 * A), (-B + sq) / (2.0 * A)})
    if (u > 0.0 && u < 1.0) m = std::max(m, std::abs(q.at(u)));
  return m;
}

namespace {

// Endpoint-only RK4 rollout from the identity pose; the solver's inner loop,
// so no allocation.
Pose2D integrate_endpoint(const SplineParams& p, int n_steps) {
  Cubic q(p);
  double h = p.s / n_steps;
  double x = 0.0, y = 0.0, psi = 0.0;
  for (int i = 0; i < n_steps; ++i) {
    double u0 = static_cast<double>(i) / n_steps;
    double uh = (i + 0.5) / static_cast<double>(n_steps);
    double u1 = static_cast<double>(i + 1) / n_steps;
    double kap0 = q.at(u0), kaph = q.at(uh), kap1 = q.at(u1);
    double p1 = psi;
    double p2 = psi + 0.5 * h * kap0;
    double p3 = psi + 0.5 * h * kaph;
    double p4 = psi + h * kaph;
    x += h / 6.0 * (std::cos(p1) + 2.0 * std::cos(p2) + 2.0 * std::cos(p3) +
                    std::cos(p4));
    y += h / 6.0 * (std::sin(p1) + 2.0 * std::sin(p2) + 2.0 * std::sin(p3) +
                    std::sin(p4));
    psi += h / 6.0 * (kap0 + 2.0 * kaph + 2.0 * kaph + kap1);
  }
  return {x, y, wrap_angle(psi)};
}

}  // namespace

Trajectory integrate_trajectory(const VehicleState& x0, const SplineParams& p,
                                int n_steps) {
  if (p.s <= 0.0) throw OutOfDomain("spline length must be positive");
  if (n_steps < 1) throw OutOfDomain("n_steps must be >= 1");
  Cubic q(p);
  double h = p.s / n_steps;

  Trajectory traj;
  traj.params = p;
  traj.start = x0;
  traj.samples.reserve(n_steps + 1);

  double x = x0.pose.x, y = x0.pose.y, psi = x0.pose.theta;
  traj.samples.push_back({0.0, x0.pose, q.at(0.0)});
  for (int i = 0; i < n_steps; ++i) {
    double u0 = static_cast<double>(i) / n_steps;
    double uh = (i + 0.5) / static_cast<double>(n_steps);
    double u1 = static_cast<double>(i + 1) / n_steps;
    double kap0 = q.at(u0), kaph = q.at(uh), kap1 = q.at(u1);
    double p1 = psi;
    double p2 = psi + 0.5 * h * kap0;
    double p3 = psi + 0.5 * h * kaph;
    double p4 = psi + h * kaph;
    x += h / 6.0 * (std::cos(p1) + 2.0 * std::cos(p2) + 2.0 * std::cos(p3) +
                    std::cos(p4));
    y += h / 6.0 * (std::sin(p1) + 2.0 * std::sin(p2) + 2.0 * std::sin(p3) +
                    std::sin(p4));
    psi += h / 6.0 * (kap0 + 2.0 * kaph + 2.0 * kaph + kap1);
    traj.samples.push_back({(i + 1) * h, {x, y, wrap_angle(psi)}, kap1});
  }
  traj.endpoint.pose = traj.samples.back().pose;
  traj.endpoint.v = x0.v;
  traj.endpoint.kappa = p.d;
  return traj;
}

BvpResult solve_bvp(const VehicleState& x0, const GoalState& goal,
                    const BvpOptions& opts) {
  Pose2D target = to_local_frame(x0.pose, goal.pose);
  double d_euclid = std::hypot(target.x, target.y);
  if (d_euclid < 0.05)
    throw DegenerateGoal("goal is within 5cm of the start state");

  const double a = x0.kappa;
  const double d = goal.kappa;
  const double s_floor = std::max(0.5 * d_euclid, 1e-3);

  // Arc-length seed: straight-line distance stretched for heading change.
  double s = d_euclid * (1.0 + 0.2 * target.theta * target.theta);
  double b = a + (d - a) / 3.0;
  double c = a + 2.0 * (d - a) / 3.0;

  auto residual = [&](double bb, double cc, double ss) {
    SplineParams p{std::max(ss, s_floor), a, bb, cc, d};
    Pose2D end = integrate_endpoint(p, opts.n_steps);
    return Eigen::Vector3d(end.x - target.x, end.y - target.y,
                           wrap_angle(end.theta - target.theta));
  };

  Eigen::Vector3d r = residual(b, c, s);
  BvpResult out;
  auto record = [&](int iters) {
    out.params = {std::max(s, s_floor), a, b, c, d};
    out.iters = iters;
    out.pos_residual = std::hypot(r(0), r(1));
    out.heading_residual = std::abs(r(2));
    out.converged = out.pos_residual < opts.pos_tol &&
                    out.heading_residual < opts.heading_tol;
  };

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    record(iter);
    if (out.converged) return out;

    double fd = opts.fd_step;
    Eigen::Matrix3d J;
    J.col(0) = (residual(b + fd, c, s) - residual(b - fd, c, s)) / (2.0 * fd);
    J.col(1) = (residual(b, c + fd, s) - residual(b, c - fd, s)) / (2.0 * fd);
    J.col(2) = (residual(b, c, s + fd) - residual(b, c, s - fd)) / (2.0 * fd);

    Eigen::Vector3d step = J.fullPivLu().solve(-r);
    if (!step.allFinite()) break;

    // Damped acceptance: halve the step until the residual shrinks.
    double rn = r.norm();
    double lam = 1.0;
    bool accepted = false;
    for (int h = 0; h <= opts.max_halvings; ++h, lam *= 0.5) {
      double nb = b + lam * step(0);
      double nc = c + lam * step(1);
      double ns = std::max(s + lam * step(2), s_floor);
      Eigen::Vector3d nr = residual(nb, nc, ns);
      if (nr.norm() < rn) {
        b = nb;
        c = nc;
        s = ns;
        r = nr;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // stalled
  }
  record(opts.max_iters);
  return out;
}

std::vector<GoalState> sample_goals(const GoalRegion& region,
                                    const Pose2D& ego) {
  PathPoint proj = closest_point_on_path(region.centerline, ego.x, ego.y);
  // Arc position of the projection.
  double arc0 = 0.0;
  for (int i = 0; i < proj.segment; ++i) {
    Vec2 a = region.centerline.segment_start(i);
    Vec2 b = region.centerline.segment_end(i);
    arc0 += std::hypot(b.x - a.x, b.y - a.y);
  }
  {
    Vec2 a = region.centerline.segment_start(proj.segment);
    Vec2 b = region.centerline.segment_end(proj.segment);
    arc0 += proj.t * std::hypot(b.x - a.x, b.y - a.y);
  }

  std::vector<GoalState> goals;
  goals.reserve(region.longitudinal.size() * region.lateral.size());
  for (double ahead : region.longitudinal) {
    Vec2 pos;
    double tangent;
    point_at_arc(region.centerline, arc0 + ahead, &pos, &tangent);
    for (double offset : region.lateral) {
      Pose2D world{pos.x - offset * std::sin(tangent),
                   pos.y + offset * std::cos(tangent), tangent};
      Pose2D local = to_local_frame(ego, world);
      if (local.x <= 0.0) continue;  // behind or abreast: not reachable
      goals.push_back({local, region.goal_kappa});
    }
  }
  return goals;
}

namespace {

// 1D squared distance transform (lower envelope of parabolas).
void dt_1d(const std::vector<double>& f, std::vector<double>& out, int n,
           std::vector<int>& v, std::vector<double>& z) {
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double sline;
    while (true) {
      sline = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k]);
      if (sline <= z[k]) {
        --k;
      } else {
        break;
      }
    }
    ++k;
    v[k] = q;
    z[k] = sline;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    double dq = q - v[k];
    out[q] = dq * dq + f[v[k]];
  }
}

}  // namespace

DistanceField::DistanceField(const OccupancyGrid& grid)
    : width_(grid.width),
      height_(grid.height),
      resolution_(grid.resolution),
      origin_(grid.origin) {
  const double inf = 1e18;
  size_t total = static_cast<size_t>(width_) * height_;
  std::vector<double> sq(total);
  for (size_t i = 0; i < total; ++i)
    sq[i] = grid.cells[i] >= grid.occupied_threshold ? 0.0 : inf;

  int n_max = std::max(width_, height_);
  std::vector<double> f(n_max), out(n_max), z(n_max + 1);
  std::vector<int> v(n_max);

  for (int row = 0; row < height_; ++row) {
    double* line = &sq[static_cast<size_t>(row) * width_];
    std::copy(line, line + width_, f.begin());
    dt_1d(f, out, width_, v, z);
    std::copy(out.begin(), out.begin() + width_, line);
  }
  for (int col = 0; col < width_; ++col) {
    for (int row = 0; row < height_; ++row)
      f[row] = sq[static_cast<size_t>(row) * width_ + col];
    dt_1d(f, out, height_, v, z);
    for (int row = 0; row < height_; ++row)
      sq[static_cast<size_t>(row) * width_ + col] = out[row];
  }

  dist_.resize(total);
  for (size_t i = 0; i < total; ++i)
    dist_[i] = static_cast<float>(std::sqrt(sq[i]) * resolution_);
}

double DistanceField::clearance(double x, double y) const {
  double c = std::cos(origin_.theta), s = std::sin(origin_.theta);
  double dx = x - origin_.x, dy = y - origin_.y;
  double lx = c * dx + s * dy;
  double ly = -s * dx + c * dy;
  int col = static_cast<int>(std::floor(lx / resolution_));
  int row = static_cast<int>(std::floor(ly / resolution_));
  if (col < 0 || col >= width_ || row < 0 || row >= height_) return 0.0;
  return dist_[static_cast<size_t>(row) * width_ + col];
}

std::optional<Evaluation> evaluate_trajectory(const Trajectory& traj,
                                              const DistanceField& field,
                                              const std::vector<Obb>& peers,
                                              const WaypointPath& centerline,
                                              const EvalConfig& cfg) {
  for (const TrajectorySample& sample : traj.samples) {
    if (field.clearance(sample.pose.x, sample.pose.y) < cfg.inflation_radius)
      return std::nullopt;
    for (const Obb& peer : peers)
      if (obb_distance(peer, sample.pose.x, sample.pose.y) <
          cfg.inflation_radius)
        return std::nullopt;
  }
  double peak = max_abs_kappa(traj.params);
  if (peak > cfg.kappa_max + 1e-9) return std::nullopt;

  Evaluation ev;
  ev.max_kappa = peak;
  ev.lateral = closest_point_on_path(centerline, traj.endpoint.pose.x,
                                     traj.endpoint.pose.y)
                   .distance;
  ev.cost = cfg.weights.w_lat * ev.lateral + cfg.weights.w_kappa * peak +
            cfg.weights.w_len * traj.params.s;
  ev.v_feasible =
      std::min(cfg.v_max, std::sqrt(cfg.a_lat_max / std::max(peak, 1e-9)));
  return ev;
}

TrajectoryConnector bvp_connector(const VehicleState& x0,
                                  const BvpOptions& opts) {
  VehicleState local{{0.0, 0.0, 0.0}, x0.v, x0.kappa};
  return [local, opts](const GoalState& goal) -> std::optional<SplineParams> {
    try {
      BvpResult res = solve_bvp(local, goal, opts);
      if (!res.converged) return std::nullopt;
      return res.params;
    } catch (const DegenerateGoal&) {
      return std::nullopt;
    }
  };
}

PlanResult plan_step(const VehicleState& x0, const GoalRegion& region,
                     const DistanceField& field, const std::vector<Obb>& peers,
                     const EvalConfig& cfg, const TrajectoryConnector& connect,
                     double control_dt) {
  PlanResult result;
  std::vector<GoalState> goals = sample_goals(region, x0.pose);
  result.goals_sampled = static_cast<int>(goals.size());

  bool have_best = false;
  Trajectory best_traj;
  Evaluation best_ev;
  for (const GoalState& goal : goals) {
    std::optional<SplineParams> params = connect(goal);
    if (!params) continue;
    ++result.connected;
    Trajectory traj = integrate_trajectory(x0, *params, cfg.eval_steps);
    std::optional<Evaluation> ev =
        evaluate_trajectory(traj, field, peers, region.centerline, cfg);
    if (!ev) continue;
    ++result.feasible;
    bool better = false;
    if (!have_best) {
      better = true;
    } else if (ev->cost != best_ev.cost) {
      better = ev->cost < best_ev.cost;
    } else if (ev->lateral != best_ev.lateral) {
      // Exact cost tie (symmetric lattices do this): prefer the centerline.
      better = ev->lateral < best_ev.lateral;
    } else {
      better = traj.params.s < best_traj.params.s;
    }
    if (better) {
      have_best = true;
      best_traj = std::move(traj);
      best_ev = *ev;
    }
  }

  if (!have_best) {
    result.command = {0.0, 0.0};  // nothing survives: brake straight
    return result;
  }
  // Steer with the curvature a control period down the spline; from (near)
  // rest, preview at a floor speed so the command still turns the wheel.
  double preview_v = std::max(x0.v, 0.5);
  double arc = std::clamp(preview_v * control_dt, 0.0, best_traj.params.s);
  result.command = {best_ev.v_feasible, kappa_at(best_traj.params, arc)};
  result.trajectory = std::move(best_traj);
  result.evaluation = best_ev;
  return result;
}

}  // namespace chicane
