#include "cap/calibration.hpp"

#include <algorithm>
#include <cmath>

#include "cap/error.hpp"

namespace cap {

void PsoConfig::validate() const {
  if (swarm_size < 2) throw Error(ErrorCode::InvalidArgument, "swarm needs at least 2 particles");
  if (iterations < 0) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (!(inertia >= 0.0 && inertia <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "inertia must lie in [0, 1]");
  }
  if (!(cognitive >= 0.0) || !(social >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "cognitive/social coefficients must be >= 0");
  }
  if (!(scale_min < scale_max) || !(offset_min < offset_max)) {
    throw Error(ErrorCode::InvalidArgument, "search bounds are empty");
  }
  if (!(velocity_clamp > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "velocity clamp must be positive");
  }
}

double calibration_cost(const CalibrationParams& theta, std::span<const CalibrationPair> pairs) {
  if (pairs.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 pairs");
  double sum = 0.0;
  for (const auto& p : pairs) {
    const double r = p.raw * theta.scale + theta.offset - p.truth;
    sum += r * r;
  }
  return sum;
}

namespace {

double cost_at(const Vec2& x, std::span<const CalibrationPair> pairs) {
  return calibration_cost({x(0), x(1)}, pairs);
}

Vec2 lower(const PsoConfig& c) { return {c.scale_min, c.offset_min}; }
Vec2 upper(const PsoConfig& c) { return {c.scale_max, c.offset_max}; }

}  // namespace

Swarm init_swarm(std::span<const CalibrationPair> pairs, const PsoConfig& cfg, PsoRng& rng) {
  cfg.validate();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec2 lo = lower(cfg), hi = upper(cfg);

  Swarm swarm;
  swarm.particles.resize(static_cast<std::size_t>(cfg.swarm_size));
  for (auto& p : swarm.particles) {
    const double a = unit(rng);
    const double b = unit(rng);
    p.position = {lo(0) + a * (hi(0) - lo(0)), lo(1) + b * (hi(1) - lo(1))};
    p.best_position = p.position;
    p.best_cost = cost_at(p.position, pairs);
  }
  const auto best = std::min_element(
      swarm.particles.begin(), swarm.particles.end(),
      [](const Particle& a, const Particle& b) { return a.best_cost < b.best_cost; });
  swarm.global_best = best->best_position;
  swarm.global_best_cost = best->best_cost;
  return swarm;
}

Swarm pso_step(const Swarm& swarm, std::span<const CalibrationPair> pairs, const PsoConfig& cfg,
               PsoRng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vec2 lo = lower(cfg), hi = upper(cfg);
  const Vec2 vmax = cfg.velocity_clamp * (hi - lo);

  Swarm next = swarm;
  for (auto& p : next.particles) {
    const double r1 = unit(rng);
    const double r2 = unit(rng);
    Vec2 v = cfg.inertia * p.velocity + cfg.cognitive * r1 * (p.best_position - p.position) +
             cfg.social * r2 * (swarm.global_best - p.position);
    v = v.cwiseMax(-vmax).cwiseMin(vmax);
    p.velocity = v;
    p.position = (p.position + v).cwiseMax(lo).cwiseMin(hi);
  }
  // Costs are evaluated after every particle has moved so the social term of
  // this step uses the previous global best for all particles.
  for (auto& p : next.particles) {
    const double c = cost_at(p.position, pairs);
    if (c < p.best_cost) {
      p.best_cost = c;
      p.best_position = p.position;
    }
    if (p.best_cost < next.global_best_cost) {
      next.global_best_cost = p.best_cost;
      next.global_best = p.best_position;
    }
  }
  return next;
}

CalibrationParams calibrate(std::span<const CalibrationPair> pairs, const PsoConfig& cfg) {
  if (pairs.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 pairs");
  const auto [mn, mx] = std::minmax_element(
      pairs.begin(), pairs.end(),
      [](const CalibrationPair& a, const CalibrationPair& b) { return a.raw < b.raw; });
  if (mx->raw - mn->raw <= 1e-12) {
    throw Error(ErrorCode::DegenerateData, "all raw depth values are identical");
  }
  for (const auto& p : pairs) {
    if (!std::isfinite(p.raw) || !std::isfinite(p.truth)) {
      throw Error(ErrorCode::InvalidArgument, "calibration pairs must be finite");
    }
  }

  PsoRng rng(cfg.seed);
  Swarm swarm = init_swarm(pairs, cfg, rng);
  for (int i = 0; i < cfg.iterations; ++i) swarm = pso_step(swarm, pairs, cfg, rng);
  return {swarm.global_best(0), swarm.global_best(1)};
}

DepthMeasurement apply_calibration(const CalibrationParams& theta, double raw, double timestamp) {
  return {timestamp, raw * theta.scale + theta.offset};
}

}  // namespace cap
