#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "cap/estimators.hpp"

namespace cap {

/// One raw/true depth correspondence, metres.
struct CalibrationPair {
  double raw = 0.0;
  double truth = 0.0;
};

/// Affine depth model: depth = raw * scale + offset.
struct CalibrationParams {
  double scale = 1.0;
  double offset = 0.0;
};

struct PsoConfig {
  int swarm_size = 30;
  int iterations = 200;
  double inertia = 0.7;
  double cognitive = 1.5;
  double social = 1.5;
  double scale_min = 0.5;
  double scale_max = 2.0;
  double offset_min = -1.0;
  double offset_max = 1.0;
  /// Per-step velocity limit as a fraction of each bound range.
  double velocity_clamp = 0.2;
  std::uint64_t seed = 1;

  void validate() const;
};

struct Particle {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  Vec2 best_position = Vec2::Zero();
  double best_cost = 0.0;
};

struct Swarm {
  std::vector<Particle> particles;
  Vec2 global_best = Vec2::Zero();
  double global_best_cost = 0.0;
};

using PsoRng = std::mt19937_64;

/// Sum of squared residuals of the affine model. Throws InsufficientData for
/// fewer than two pairs.
double calibration_cost(const CalibrationParams& theta, std::span<const CalibrationPair> pairs);

/// Uniform positions inside the bounds, zero velocities.
Swarm init_swarm(std::span<const CalibrationPair> pairs, const PsoConfig& cfg, PsoRng& rng);

/// One velocity/position update for every particle, then best bookkeeping.
/// For each particle r1 then r2 are drawn from U[0,1).
Swarm pso_step(const Swarm& swarm, std::span<const CalibrationPair> pairs, const PsoConfig& cfg,
               PsoRng& rng);

/// Throws InsufficientData (< 2 pairs) or DegenerateData (all raw values equal).
CalibrationParams calibrate(std::span<const CalibrationPair> pairs, const PsoConfig& cfg = {});

DepthMeasurement apply_calibration(const CalibrationParams& theta, double raw, double timestamp = 0.0);

}  // namespace cap
