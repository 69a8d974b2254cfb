#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "cap/calibration.hpp"
#include "cap/error.hpp"
#include "oracles.hpp"

using namespace cap;

namespace {

std::vector<CalibrationPair> synthetic(double scale, double offset, double sigma, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> raw(0.2, 2.0);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<CalibrationPair> pairs;
  for (int i = 0; i < n; ++i) {
    const double r = raw(rng);
    pairs.push_back({r, scale * r + offset + (sigma > 0 ? noise(rng) : 0.0)});
  }
  return pairs;
}

Eigen::Vector2d lsq(const std::vector<CalibrationPair>& pairs) {
  std::vector<double> raw, truth;
  for (const auto& p : pairs) {
    raw.push_back(p.raw);
    truth.push_back(p.truth);
  }
  return oracle::affine_lsq(raw, truth);
}

}  // namespace

TEST(Cost, Examples) {
  const std::vector<CalibrationPair> same{{1, 1}, {2, 2}};
  EXPECT_EQ(calibration_cost({1, 0}, same), 0.0);
  const std::vector<CalibrationPair> doubled{{1, 2}, {2, 4}};
  EXPECT_EQ(calibration_cost({2, 0}, doubled), 0.0);
  EXPECT_DOUBLE_EQ(calibration_cost({1, 0}, doubled), 5.0);
}

TEST(Cost, InsufficientData) {
  const std::vector<CalibrationPair> one{{1, 1}};
  try {
    calibration_cost({1, 0}, one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(PsoStep, FrozenWithoutCoefficients) {
  const auto pairs = synthetic(1.03, -0.05, 0.0, 20, 41);
  PsoConfig cfg;
  cfg.inertia = 0.0;
  cfg.cognitive = 0.0;
  cfg.social = 0.0;
  PsoRng rng(1);
  Swarm s = init_swarm(pairs, cfg, rng);
  for (auto& p : s.particles) p.velocity = Vec2(0.1, -0.1);
  const Swarm next = pso_step(s, pairs, cfg, rng);
  for (std::size_t i = 0; i < s.particles.size(); ++i) {
    EXPECT_EQ(next.particles[i].velocity, Vec2::Zero());
    EXPECT_EQ(next.particles[i].position, s.particles[i].position);
  }
}

TEST(PsoStep, SingleParticleAtBestStays) {
  const auto pairs = synthetic(1.03, -0.05, 0.0, 20, 42);
  PsoConfig cfg;
  cfg.inertia = 0.0;
  Swarm s;
  Particle p;
  p.position = p.best_position = Vec2(1.1, 0.1);
  p.best_cost = calibration_cost({1.1, 0.1}, pairs);
  s.particles = {p};
  s.global_best = p.position;
  s.global_best_cost = p.best_cost;
  PsoRng rng(2);
  const Swarm next = pso_step(s, pairs, cfg, rng);
  EXPECT_EQ(next.particles[0].position, Vec2(1.1, 0.1));
}

TEST(PsoStep, HandComputedTwoParticles) {
  const auto pairs = synthetic(1.03, -0.05, 0.0, 20, 43);
  PsoConfig cfg;
  Swarm s;
  Particle a, b;
  a.position = Vec2(0.9, 0.2);
  a.velocity = Vec2(0.05, -0.02);
  a.best_position = Vec2(1.0, 0.1);
  b.position = Vec2(1.4, -0.3);
  b.velocity = Vec2(-0.01, 0.03);
  b.best_position = Vec2(1.2, -0.1);
  a.best_cost = calibration_cost({1.0, 0.1}, pairs);
  b.best_cost = calibration_cost({1.2, -0.1}, pairs);
  s.particles = {a, b};
  s.global_best = a.best_cost < b.best_cost ? a.best_position : b.best_position;
  s.global_best_cost = std::min(a.best_cost, b.best_cost);

  // Record the draws the step will see: r1 then r2 for each particle.
  PsoRng record(77);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double r[4];
  for (double& x : r) x = unit(record);

  PsoRng rng(77);
  const Swarm next = pso_step(s, pairs, cfg, rng);
  const Particle* in[2] = {&a, &b};
  for (int i = 0; i < 2; ++i) {
    const Particle& p = *in[i];
    for (int d = 0; d < 2; ++d) {
      const double range = d == 0 ? cfg.scale_max - cfg.scale_min : cfg.offset_max - cfg.offset_min;
      double v = 0.7 * p.velocity(d) + 1.5 * r[2 * i] * (p.best_position(d) - p.position(d)) +
                 1.5 * r[2 * i + 1] * (s.global_best(d) - p.position(d));
      v = std::clamp(v, -0.2 * range, 0.2 * range);
      EXPECT_DOUBLE_EQ(next.particles[i].velocity(d), v);
      EXPECT_DOUBLE_EQ(next.particles[i].position(d), p.position(d) + v);
    }
  }
}

TEST(PsoStep, GlobalBestMonotone) {
  const auto pairs = synthetic(1.03, -0.05, 0.001, 200, 44);
  PsoConfig cfg;
  PsoRng rng(5);
  Swarm s = init_swarm(pairs, cfg, rng);
  double initial_best = s.global_best_cost;
  for (const auto& p : s.particles) EXPECT_GE(p.best_cost, initial_best);
  for (int i = 0; i < 100; ++i) {
    const Swarm next = pso_step(s, pairs, cfg, rng);
    EXPECT_LE(next.global_best_cost, s.global_best_cost);
    for (const auto& p : next.particles) EXPECT_LE(next.global_best_cost, p.best_cost);
    s = next;
  }
}

TEST(Calibrate, RecoversSyntheticTheta) {
  const auto pairs = synthetic(1.03, -0.05, 0.001, 500, 45);
  const auto theta = calibrate(pairs);
  EXPECT_NEAR(theta.scale, 1.03, 1e-3);
  EXPECT_NEAR(theta.offset, -0.05, 1e-3);
  const auto ls = lsq(pairs);
  EXPECT_NEAR(theta.scale, ls(0), 1e-3);
  EXPECT_NEAR(theta.offset, ls(1), 1e-3);
}

TEST(Calibrate, ExactPairs) {
  const auto pairs = synthetic(0.97, 0.04, 0.0, 100, 46);
  EXPECT_LE(calibration_cost(calibrate(pairs), pairs), 1e-12);
}

TEST(Calibrate, Degenerate) {
  const std::vector<CalibrationPair> flat{{1, 1}, {1, 1.1}, {1, 0.9}};
  try {
    calibrate(flat);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateData);
  }
  try {
    calibrate(std::vector<CalibrationPair>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(Calibrate, DeterministicPerSeed) {
  const auto pairs = synthetic(1.03, -0.05, 0.001, 300, 47);
  PsoConfig cfg;
  cfg.seed = 9;
  PsoRng a(cfg.seed), b(cfg.seed);
  Swarm sa = init_swarm(pairs, cfg, a), sb = init_swarm(pairs, cfg, b);
  for (int i = 0; i < 50; ++i) {
    sa = pso_step(sa, pairs, cfg, a);
    sb = pso_step(sb, pairs, cfg, b);
    ASSERT_EQ(sa.global_best, sb.global_best);
  }
  const auto t1 = calibrate(pairs, cfg), t2 = calibrate(pairs, cfg);
  EXPECT_EQ(t1.scale, t2.scale);
  EXPECT_EQ(t1.offset, t2.offset);
}

TEST(Calibrate, SeedIndependentCost) {
  const auto pairs = synthetic(1.03, -0.05, 0.001, 300, 48);
  double first = -1.0;
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    PsoConfig cfg;
    cfg.seed = seed;
    const double c = calibration_cost(calibrate(pairs, cfg), pairs);
    if (first < 0) first = c;
    EXPECT_NEAR(c, first, 1e-6);
  }
}

TEST(Apply, Examples) {
  EXPECT_EQ(apply_calibration({1, 0}, 0.7).depth, 0.7);
  EXPECT_DOUBLE_EQ(apply_calibration({2, 0.1}, 0.5).depth, 1.1);
  EXPECT_EQ(apply_calibration({1, -0.02}, 0.02).depth, 0.0);
}

TEST(PsoConfig, Validate) {
  PsoConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.scale_min = 3.0;
  EXPECT_THROW(cfg.validate(), Error);
}
