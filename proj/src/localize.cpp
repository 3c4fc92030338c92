#include "chicane/localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chicane/errors.hpp"

namespace chicane {

ParticleSet init_particles_uniform(const OccupancyGrid& grid, int n,
                                   uint64_t seed) {
  std::vector<int> free_cells;
  for (int i = 0; i < grid.width * grid.height; ++i)
    if (grid.cells[i] < grid.occupied_threshold) free_cells.push_back(i);
  if (free_cells.empty())
    throw NoFreeSpace("no cell under the occupied threshold");

  ParticleSet set;
  set.rng = Rng(seed);
  set.particles.resize(n);
  for (Particle& p : set.particles) {
    int cell = free_cells[set.rng.uniform_int(
        static_cast<int>(free_cells.size()))];
    Vec2 c = grid.grid_to_world(cell % grid.width, cell / grid.width);
    double half = 0.5 * grid.resolution;
    p.pose.x = c.x + set.rng.uniform(-half, half);
    p.pose.y = c.y + set.rng.uniform(-half, half);
    p.pose.theta = wrap_angle(set.rng.uniform(-kPi, kPi));
    p.weight = 1.0 / n;
  }
  return set;
}

ParticleSet init_particles_gaussian(int n, const Pose2D& center,
                                    double sigma_xy, double sigma_theta,
                                    uint64_t seed) {
  ParticleSet set;
  set.rng = Rng(seed);
  set.particles.resize(n);
  for (Particle& p : set.particles) {
    p.pose = center;
    if (sigma_xy > 0.0) {
      p.pose.x += set.rng.normal(0.0, sigma_xy);
      p.pose.y += set.rng.normal(0.0, sigma_xy);
    }
    if (sigma_theta > 0.0)
      p.pose.theta = wrap_angle(p.pose.theta + set.rng.normal(0.0, sigma_theta));
    p.weight = 1.0 / n;
  }
  return set;
}

void motion_update(ParticleSet& set, const OdometryDelta& delta,
                   const MotionNoise& noise) {
  for (Particle& p : set.particles) {
    double dx = delta.dx, dy = delta.dy, dth = delta.dtheta;
    if (noise.sigma_xy > 0.0) {
      dx += set.rng.normal(0.0, noise.sigma_xy);
      dy += set.rng.normal(0.0, noise.sigma_xy);
    }
    if (noise.sigma_theta > 0.0) dth += set.rng.normal(0.0, noise.sigma_theta);
    double c = std::cos(p.pose.theta), s = std::sin(p.pose.theta);
    p.pose.x += c * dx - s * dy;
    p.pose.y += s * dx + c * dy;
    p.pose.theta = wrap_angle(p.pose.theta + dth);
  }
}

void sensor_update(ParticleSet& set, const LaserScan& scan,
                   const OccupancyGrid& grid, const MclConfig& cfg) {
  const int n = set.n();
  if (n == 0) return;
  const int k = std::max(1, cfg.subsample_k);
  ScanConfig march_only;
  march_only.march_step = cfg.march_step;
  const double step = effective_march_step(grid, march_only);
  const double inv_two_var =
      cfg.sigma_z > 0.0 ? 1.0 / (2.0 * cfg.sigma_z * cfg.sigma_z) : 0.0;
  const double neg_inf = -std::numeric_limits<double>::infinity();

  std::vector<double> logw(n);
  for (int i = 0; i < n; ++i) {
    const Pose2D& pose = set.particles[i].pose;
    double acc = std::log(std::max(set.particles[i].weight, 0.0));
    for (int b = 0; b < scan.beam_count(); b += k) {
      double z = scan.ranges[b];
      if (!std::isfinite(z)) continue;  // dropped beam: no evidence
      double ang = pose.theta + scan.angle_min + b * scan.angle_increment();
      double zh = cast_ray(grid, pose.x, pose.y, ang, scan.range_max, step);
      if (cfg.sigma_z > 0.0) {
        acc -= (z - zh) * (z - zh) * inv_two_var;
      } else if (z != zh) {
        acc = neg_inf;  // zero-sigma limit: exact match or nothing
        break;
      }
    }
    logw[i] = acc;
  }

  double m = neg_inf;
  for (double lw : logw)
    if (std::isfinite(lw)) m = std::max(m, lw);
  if (!std::isfinite(m)) {
    for (Particle& p : set.particles) p.weight = 1.0 / n;
    set.degenerate = true;
    return;
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double w = std::isfinite(logw[i]) ? std::exp(logw[i] - m) : 0.0;
    set.particles[i].weight = w;
    sum += w;
  }
  for (Particle& p : set.particles) p.weight /= sum;
  set.degenerate = false;
}

PoseEstimate resample_and_estimate(ParticleSet& set, const MclConfig& cfg) {
  const int n = set.n();
  PoseEstimate est;
  if (n == 0) return est;

  double sx = 0.0, sy = 0.0, sc = 0.0, ss = 0.0, sq = 0.0;
  for (const Particle& p : set.particles) {
    sx += p.weight * p.pose.x;
    sy += p.weight * p.pose.y;
    sc += p.weight * std::cos(p.pose.theta);
    ss += p.weight * std::sin(p.pose.theta);
    sq += p.weight * p.weight;
  }
  est.pose = {sx, sy, std::atan2(ss, sc)};
  est.neff = sq > 0.0 ? 1.0 / sq : 0.0;

  if (est.neff < 0.5 * n) {
    // Systematic resampling: one uniform draw, n evenly spaced pointers.
    // Every particle survives either floor(n*w) or ceil(n*w) times.
    std::vector<Particle> out;
    out.reserve(n);
    double u = set.rng.uniform() / n;
    double cum = 0.0;
    int i = 0;
    for (int j = 0; j < n; ++j) {
      double target = u + static_cast<double>(j) / n;
      while (cum + set.particles[i].weight < target && i + 1 < n)
        cum += set.particles[i++].weight;
      out.push_back(set.particles[i]);
      out.back().weight = 1.0 / n;
    }
    set.particles = std::move(out);
    if (cfg.roughen_xy > 0.0 || cfg.roughen_theta > 0.0) {
      for (Particle& p : set.particles) {
        if (cfg.roughen_xy > 0.0) {
          p.pose.x += set.rng.normal(0.0, cfg.roughen_xy);
          p.pose.y += set.rng.normal(0.0, cfg.roughen_xy);
        }
        if (cfg.roughen_theta > 0.0)
          p.pose.theta =
              wrap_angle(p.pose.theta + set.rng.normal(0.0, cfg.roughen_theta));
      }
    }
    est.resampled = true;
  }
  return est;
}

}  // namespace chicane
