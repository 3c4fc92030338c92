#include "chicane/rbf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "chicane/errors.hpp"

namespace chicane {

RbfDataset build_training_set(const VehicleState& x0,
                              const std::vector<GoalState>& lattice,
                              const BvpOptions& opts) {
  RbfDataset data;
  data.a_value = x0.kappa;
  for (const GoalState& goal : lattice) {
    try {
      BvpResult res = solve_bvp(x0, goal, opts);
      if (res.converged) {
        data.goals.push_back(goal);
        data.params.push_back(res.params);
      } else {
        ++data.failed;
      }
    } catch (const DegenerateGoal&) {
      ++data.failed;
    }
  }
  if (data.goals.size() < 4)
    throw InsufficientData("only " + std::to_string(data.goals.size()) +
                           " of " + std::to_string(lattice.size()) +
                           " goals connected; need at least 4");
  return data;
}

namespace {

void normalize_input(const RbfNetwork& net, const Pose2D& pose, double* out) {
  double raw[3] = {pose.x, pose.y, pose.theta};
  for (int k = 0; k < 3; ++k)
    out[k] = (raw[k] - net.in_offset[k]) / net.in_scale[k];
}

}  // namespace

RbfNetwork train_rbf(const RbfDataset& dataset, double epsilon) {
  const int m = static_cast<int>(dataset.goals.size());
  if (m < 4) throw InsufficientData("need at least 4 training pairs");

  RbfNetwork net;
  net.a_value = dataset.a_value;

  // Input normalization to [-1, 1] per dimension.
  double lo[3], hi[3];
  for (int k = 0; k < 3; ++k) {
    lo[k] = std::numeric_limits<double>::infinity();
    hi[k] = -lo[k];
  }
  for (const GoalState& g : dataset.goals) {
    double raw[3] = {g.pose.x, g.pose.y, g.pose.theta};
    for (int k = 0; k < 3; ++k) {
      lo[k] = std::min(lo[k], raw[k]);
      hi[k] = std::max(hi[k], raw[k]);
    }
  }
  for (int k = 0; k < 3; ++k) {
    net.in_offset[k] = 0.5 * (lo[k] + hi[k]);
    double half = 0.5 * (hi[k] - lo[k]);
    net.in_scale[k] = half > 1e-12 ? half : 1.0;  // flat dimension
  }

  net.centers.resize(static_cast<size_t>(m) * 3);
  for (int i = 0; i < m; ++i)
    normalize_input(net, dataset.goals[i].pose, &net.centers[i * 3]);

  // Output z-scoring over (s, b, c, d).
  Eigen::MatrixXd targets(m, 4);
  for (int i = 0; i < m; ++i) {
    const SplineParams& p = dataset.params[i];
    targets(i, 0) = p.s;
    targets(i, 1) = p.b;
    targets(i, 2) = p.c;
    targets(i, 3) = p.d;
  }
  for (int k = 0; k < 4; ++k) {
    net.out_mean[k] = targets.col(k).mean();
    double var = (targets.col(k).array() - net.out_mean[k]).square().mean();
    double sd = std::sqrt(var);
    net.out_std[k] = sd > 1e-12 ? sd : 1.0;
    targets.col(k) = (targets.col(k).array() - net.out_mean[k]) / net.out_std[k];
  }

  // Pairwise distances: duplicate detection and the automatic kernel width.
  Eigen::MatrixXd dist(m, m);
  std::vector<double> nearest(m, std::numeric_limits<double>::infinity());
  for (int i = 0; i < m; ++i) {
    dist(i, i) = 0.0;
    for (int j = i + 1; j < m; ++j) {
      double dx = net.centers[i * 3] - net.centers[j * 3];
      double dy = net.centers[i * 3 + 1] - net.centers[j * 3 + 1];
      double dth = net.centers[i * 3 + 2] - net.centers[j * 3 + 2];
      double d = std::sqrt(dx * dx + dy * dy + dth * dth);
      if (d < 1e-12)
        throw SingularKernel("duplicate training goals at index " +
                             std::to_string(i) + " and " + std::to_string(j));
      dist(i, j) = dist(j, i) = d;
      nearest[i] = std::min(nearest[i], d);
      nearest[j] = std::min(nearest[j], d);
    }
  }
  if (epsilon > 0.0) {
    net.epsilon = epsilon;
  } else {
    std::vector<double> nn = nearest;
    std::nth_element(nn.begin(), nn.begin() + m / 2, nn.end());
    double median = nn[m / 2];
    // 0.4 measured as the sweet spot on goal lattices: 1/spacing is too
    // sharp to generalize between training points, and much below 0.4 the
    // kernel matrix hits its flat-limit conditioning cliff.
    net.epsilon = median > 1e-12 ? 0.4 / median : 1.0;
  }

  Eigen::MatrixXd phi =
      (-(net.epsilon * dist.array()).square()).exp().matrix();

  auto solve_and_check = [&](double jitter) {
    Eigen::MatrixXd sys = phi;
    if (jitter > 0.0) sys.diagonal().array() += jitter;
    Eigen::MatrixXd w = sys.ldlt().solve(targets);
    double rel = (phi * w - targets).norm() / std::max(targets.norm(), 1e-300);
    return std::make_pair(w, rel);
  };

  auto [w, rel] = solve_and_check(0.0);
  if (!(rel <= 1e-10)) {
    std::tie(w, rel) = solve_and_check(1e-10);
    net.jittered = true;
    if (!(rel <= 1e-6))
      throw SingularKernel("kernel matrix is numerically singular (residual " +
                           std::to_string(rel) + ")");
  }

  net.weights.resize(static_cast<size_t>(m) * 4);
  for (int i = 0; i < m; ++i)
    for (int k = 0; k < 4; ++k) net.weights[i * 4 + k] = w(i, k);
  net.trained = true;

  // Worst relative reconstruction error across the training set, using the
  // real inference path.
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    SplineParams p = infer(net, dataset.goals[i].pose);
    const SplineParams& t = dataset.params[i];
    double num = std::hypot(std::hypot(p.s - t.s, p.b - t.b),
                            std::hypot(p.c - t.c, p.d - t.d));
    double den = std::sqrt(t.s * t.s + t.b * t.b + t.c * t.c + t.d * t.d);
    worst = std::max(worst, num / std::max(den, 1e-12));
  }
  net.training_residual = worst;
  return net;
}

SplineParams infer(const RbfNetwork& net, const Pose2D& goal_pose) {
  if (!net.trained) throw Untrained("network has not been trained");
  double q[3];
  normalize_input(net, goal_pose, q);

  const int m = net.size();
  double acc[4] = {0, 0, 0, 0};
  const double e2 = net.epsilon * net.epsilon;
  for (int i = 0; i < m; ++i) {
    const double* c = &net.centers[static_cast<size_t>(i) * 3];
    double dx = q[0] - c[0], dy = q[1] - c[1], dth = q[2] - c[2];
    double r2 = dx * dx + dy * dy + dth * dth;
    double phi = std::exp(-e2 * r2);
    const double* w = &net.weights[static_cast<size_t>(i) * 4];
    acc[0] += phi * w[0];
    acc[1] += phi * w[1];
    acc[2] += phi * w[2];
    acc[3] += phi * w[3];
  }
  SplineParams p;
  p.s = std::max(acc[0] * net.out_std[0] + net.out_mean[0], 1e-3);
  p.a = net.a_value;
  p.b = acc[1] * net.out_std[1] + net.out_mean[1];
  p.c = acc[2] * net.out_std[2] + net.out_mean[2];
  p.d = acc[3] * net.out_std[3] + net.out_mean[3];
  return p;
}

TrajectoryConnector rbf_connector(const RbfNetwork& net) {
  return [&net](const GoalState& goal) -> std::optional<SplineParams> {
    return infer(net, goal.pose);
  };
}

double test_error(const RbfNetwork& net, const std::vector<Pose2D>& goals,
                  int n_steps) {
  double worst = 0.0;
  for (const Pose2D& goal : goals) {
    SplineParams p = infer(net, goal);
    Trajectory t = integrate_trajectory(VehicleState{}, p, n_steps);
    double ex = (t.endpoint.pose.x - goal.x) / (2.0 * net.in_scale[0]);
    double ey = (t.endpoint.pose.y - goal.y) / (2.0 * net.in_scale[1]);
    double eth = wrap_angle(t.endpoint.pose.theta - goal.theta) / kPi;
    worst = std::max(worst, std::sqrt(ex * ex + ey * ey + eth * eth));
  }
  return worst;
}

namespace {

constexpr char kMagic[8] = {'C', 'H', 'C', 'R', 'B', 'F', '0', '1'};

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void get(std::ifstream& f, T* v) {
  f.read(reinterpret_cast<char*>(v), sizeof(T));
  if (!f) throw ParseError("truncated network file");
}

}  // namespace

void save_rbf(const RbfNetwork& net, const std::string& path) {
  if (!net.trained) throw Untrained("refusing to save an untrained network");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open for writing: " + path);
  f.write(kMagic, sizeof(kMagic));
  put(f, static_cast<uint32_t>(net.size()));
  put(f, static_cast<uint32_t>(net.jittered ? 1 : 0));
  put(f, net.epsilon);
  put(f, net.a_value);
  put(f, net.training_residual);
  for (double v : net.in_offset) put(f, v);
  for (double v : net.in_scale) put(f, v);
  for (double v : net.out_mean) put(f, v);
  for (double v : net.out_std) put(f, v);
  f.write(reinterpret_cast<const char*>(net.centers.data()),
          static_cast<std::streamsize>(net.centers.size() * sizeof(double)));
  f.write(reinterpret_cast<const char*>(net.weights.data()),
          static_cast<std::streamsize>(net.weights.size() * sizeof(double)));
  if (!f) throw ParseError("write failed: " + path);
}

RbfNetwork load_rbf(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open network file: " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kMagic, 6) != 0)
    throw ParseError("not a network file: " + path);
  if (std::memcmp(magic + 6, kMagic + 6, 2) != 0)
    throw VersionMismatch(std::string("unsupported network version '") +
                          magic[6] + magic[7] + "'");
  RbfNetwork net;
  uint32_t m = 0, flags = 0;
  get(f, &m);
  get(f, &flags);
  if (m < 1 || m > 10'000'000) throw ParseError("implausible center count");
  net.jittered = flags & 1;
  get(f, &net.epsilon);
  get(f, &net.a_value);
  get(f, &net.training_residual);
  for (double& v : net.in_offset) get(f, &v);
  for (double& v : net.in_scale) get(f, &v);
  for (double& v : net.out_mean) get(f, &v);
  for (double& v : net.out_std) get(f, &v);
  net.centers.resize(static_cast<size_t>(m) * 3);
  net.weights.resize(static_cast<size_t>(m) * 4);
  f.read(reinterpret_cast<char*>(net.centers.data()),
         static_cast<std::streamsize>(net.centers.size() * sizeof(double)));
  f.read(reinterpret_cast<char*>(net.weights.data()),
         static_cast<std::streamsize>(net.weights.size() * sizeof(double)));
  if (!f) throw ParseError("truncated network file: " + path);
  char extra;
  if (f.read(&extra, 1)) throw ParseError("trailing bytes in network file");
  net.trained = true;
  return net;
}

}  // namespace chicane
