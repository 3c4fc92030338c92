#pragma once

// Monte Carlo localization against a known occupancy grid. Particles carry
// normalized weights; the sensor model re-casts every k-th beam from each
// particle with the same ray marcher the simulator uses, so a particle at
// the true pose reproduces the scan it is scored against.

#include <cstdint>
#include <vector>

#include "chicane/raycast.hpp"
#include "chicane/rng.hpp"
#include "chicane/sim.hpp"

namespace chicane {

struct Particle {
  Pose2D pose;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  Rng rng{0};
  // Last sensor_update found no particle with usable likelihood and reset
  // the weights to uniform instead of dividing by zero.
  bool degenerate = false;

  int n() const { return static_cast<int>(particles.size()); }
};

struct MclConfig {
  int subsample_k = 18;    // score every k-th beam
  double sigma_z = 0.1;    // beam likelihood stddev, meters; <= 0 means an
                           // exact-match likelihood (the Gaussian's limit)
  double march_step = 0.0;  // expected-range marching stride; <= 0: res/2
  double roughen_xy = 0.0;  // post-resample jitter stddev, meters
  double roughen_theta = 0.0;  // radians
};

struct MotionNoise {
  double sigma_xy = 0.0;
  double sigma_theta = 0.0;
};

struct PoseEstimate {
  Pose2D pose;
  double neff = 0.0;  // effective sample size before any resampling
  bool resampled = false;
};

// n particles uniform over the free cells (jittered inside each cell),
// headings uniform over (-pi, pi]. Throws NoFreeSpace if the grid has no
// cell under the occupied threshold.
ParticleSet init_particles_uniform(const OccupancyGrid& grid, int n,
                                   uint64_t seed);

// n particles drawn from an isotropic Gaussian around `center`; sigma = 0
// stacks them all exactly at the center.
ParticleSet init_particles_gaussian(int n, const Pose2D& center,
                                    double sigma_xy, double sigma_theta,
                                    uint64_t seed);

// Advance every particle by the body-frame odometry delta plus per-particle
// Gaussian noise. A zero-sigma component draws nothing from the rng, so
// noiseless updates shift the whole set rigidly and stay reproducible.
void motion_update(ParticleSet& set, const OdometryDelta& delta,
                   const MotionNoise& noise);

// Reweight by the scan likelihood: for every k-th finite beam, the expected
// range is cast from the particle and scored with a Gaussian on the range
// error. Accumulation is in log space with a max shift, so long products
// cannot underflow; weights come out normalized. If no particle ends up
// with a finite log weight the set is reset to uniform weights and the
// degenerate flag raised. Weights are computed and reduced in particle
// index order, so results are bit-identical run to run.
void sensor_update(ParticleSet& set, const LaserScan& scan,
                   const OccupancyGrid& grid, const MclConfig& cfg);

// Weighted mean pose (circular mean for heading), then systematic
// resampling if the effective sample size dropped under n/2. Resampled
// weights are uniform; cfg.roughen_* adds per-copy jitter so duplicates can
// spread again on the next update.
PoseEstimate resample_and_estimate(ParticleSet& set, const MclConfig& cfg);

}  // namespace chicane
