#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "cap/attitude.hpp"
#include "cap/error.hpp"
#include "cap/simulator.hpp"
#include "oracles.hpp"

using namespace cap;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

Mat2 finite_difference_jacobian(double roll, double pitch, const Vec3& w, double dt) {
  const double h = 1e-6;
  Mat2 j;
  j.col(0) = (predict_mean(roll + h, pitch, w, dt) - predict_mean(roll - h, pitch, w, dt)) / (2 * h);
  j.col(1) = (predict_mean(roll, pitch + h, w, dt) - predict_mean(roll, pitch - h, w, dt)) / (2 * h);
  return j;
}

Vec3 gravity_in_body(double roll, double pitch) {
  return oracle::zyx(0.0, pitch, roll).transpose() * Vec3(0, 0, -kGravity);
}

}  // namespace

TEST(Predict, ZeroRateKeepsMeanAndAddsQ) {
  TiltConfig cfg;
  const TiltState s{0.1, -0.2, Mat2::Identity() * 0.01};
  const TiltState out = ekf_predict(s, Vec3::Zero(), 0.01, cfg);
  EXPECT_EQ(out.roll, 0.1);
  EXPECT_EQ(out.pitch, -0.2);
  EXPECT_LE((out.covariance - (s.covariance + cfg.process_noise)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Predict, RollRateIntegration) {
  const TiltState out = ekf_predict({0, 0, Mat2::Zero()}, Vec3(0.1, 0, 0), 0.01, {});
  EXPECT_NEAR(out.roll, 0.001, 1e-15);
  EXPECT_EQ(out.pitch, 0.0);
}

TEST(Predict, JacobianAtLevel) {
  const Vec3 w(0, 0.2, 0.3);
  const Mat2 a = prediction_jacobian(0, 0, w, 0.01);
  EXPECT_LE((a - finite_difference_jacobian(0, 0, w, 0.01)).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(a(0, 1), 0.01 * 0.3, 1e-15);
  EXPECT_NEAR(a(1, 0), -0.01 * 0.3, 1e-15);
}

TEST(Predict, JacobianAt100States) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> ang(-0.6, 0.6), rate(-2.0, 2.0), dt(0.001, 0.05);
  for (int i = 0; i < 100; ++i) {
    const double r = ang(rng), p = ang(rng), h = dt(rng);
    const Vec3 w(rate(rng), rate(rng), rate(rng));
    EXPECT_LE((prediction_jacobian(r, p, w, h) - finite_difference_jacobian(r, p, w, h)).cwiseAbs().maxCoeff(),
              1e-6);
  }
}

TEST(Predict, Singularity) {
  EXPECT_THROW(ekf_predict({0, std::numbers::pi / 2, Mat2::Identity()}, Vec3::Zero(), 0.01, {}), Error);
  try {
    ekf_predict({0, 0, Mat2::Identity()}, Vec3::Zero(), 0.0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PitchSingularity);
  }
}

TEST(AccelToTilt, Level) {
  const auto m = accel_to_tilt({0, 0, -kGravity});
  EXPECT_EQ(m.roll, 0.0);
  EXPECT_EQ(m.pitch, 0.0);
}

TEST(AccelToTilt, UpsideDownRegression) {
  // Gravity reading flipped: the roll branch lands on -pi.
  const auto m = accel_to_tilt({0, 0, kGravity});
  EXPECT_EQ(m.roll, -std::numbers::pi);
  EXPECT_EQ(m.pitch, 0.0);
}

TEST(AccelToTilt, OutOfRange) {
  try {
    accel_to_tilt({0, 0, 0.01});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AccelOutOfRange);
  }
}

TEST(AccelToTilt, InvertsGravityModel) {
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> ang(-0.5, 0.5);
  for (int i = 0; i < 200; ++i) {
    const double r = ang(rng), p = ang(rng);
    const auto m = accel_to_tilt(gravity_in_body(r, p));
    EXPECT_NEAR(m.roll, r, 1e-12);
    EXPECT_NEAR(m.pitch, p, 1e-12);
  }
}

TEST(Update, MeasurementAtPriorMean) {
  const TiltState s{0.1, 0.05, Mat2::Identity() * 0.01};
  const TiltState out = ekf_update(s, gravity_in_body(0.1, 0.05), {});
  EXPECT_NEAR(out.roll, 0.1, 1e-14);
  EXPECT_NEAR(out.pitch, 0.05, 1e-14);
  EXPECT_LT(out.covariance(0, 0), s.covariance(0, 0));
  EXPECT_LT(out.covariance(1, 1), s.covariance(1, 1));
}

TEST(Update, StaticConvergenceFromRoll) {
  TiltConfig cfg;
  TiltState s{0.2, 0.0, cfg.initial_covariance};
  for (int i = 0; i < 200; ++i) {
    s = ekf_predict(s, Vec3::Zero(), 0.01, cfg);
    s = ekf_update(s, {0, 0, -kGravity}, cfg);
  }
  EXPECT_LT(std::abs(s.roll), 1e-3);
}

TEST(Update, ZeroCovarianceFreezesState) {
  TiltConfig cfg;
  cfg.process_noise = Mat2::Zero();
  TiltState s{0.1, -0.1, Mat2::Zero()};
  for (int i = 0; i < 10; ++i) {
    s = ekf_predict(s, Vec3::Zero(), 0.01, cfg);
    s = ekf_update(s, {0, 0, -kGravity}, cfg);
  }
  EXPECT_EQ(s.roll, 0.1);
  EXPECT_EQ(s.pitch, -0.1);
}

TEST(Update, StaticConvergenceGrid) {
  TiltConfig cfg;
  for (double r0 : {-0.3, -0.1, 0.0, 0.2, 0.3}) {
    for (double p0 : {-0.3, 0.0, 0.15, 0.3}) {
      TiltState s{r0, p0, cfg.initial_covariance};
      const Vec3 a = gravity_in_body(0.05, -0.02);
      for (int i = 0; i < 500; ++i) {
        s = ekf_predict(s, Vec3::Zero(), 0.01, cfg);
        s = ekf_update(s, a, cfg);
      }
      EXPECT_LT(std::abs(s.roll - 0.05), 0.5 * kDeg);
      EXPECT_LT(std::abs(s.pitch + 0.02), 0.5 * kDeg);
    }
  }
}

TEST(Covariance, StaysSymmetricPsd) {
  TiltConfig cfg;
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gyro(0.0, 0.3), acc(0.0, 0.3);
  TiltState s{0, 0, cfg.initial_covariance};
  for (int i = 0; i < 10000; ++i) {
    s = ekf_predict(s, Vec3(gyro(rng), gyro(rng), gyro(rng)), 0.01, cfg);
    if (std::abs(s.pitch) > 1.0) s.pitch = 0.0;
    s = ekf_update(s, gravity_in_body(0.1, 0.1) + Vec3(acc(rng), acc(rng), acc(rng)), cfg);
    ASSERT_EQ(s.covariance(0, 1), s.covariance(1, 0));
    Eigen::SelfAdjointEigenSolver<Mat2> es(s.covariance);
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Fuse, Examples) {
  EXPECT_LE((fuse_full_rotation({0, 0, Mat2::Zero()}, 0) - Mat3::Identity()).norm(), 1e-15);
  EXPECT_LE((fuse_full_rotation({0, 0, Mat2::Zero()}, std::numbers::pi / 2) - oracle::rz(std::numbers::pi / 2))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
  EXPECT_LE((fuse_full_rotation({0.05, -0.03, Mat2::Zero()}, 1.0) - oracle::zyx(1.0, -0.03, 0.05))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

TEST(Filter, InitialisesFromAccel) {
  TiltFilter f;
  const auto s = f.process({0.0, Vec3::Zero(), gravity_in_body(0.1, -0.05)});
  ASSERT_TRUE(s);
  EXPECT_NEAR(s->roll, 0.1, 1e-12);
  EXPECT_NEAR(s->pitch, -0.05, 1e-12);
}

TEST(Filter, TracksTenDegreeWave) {
  SimulationConfig cfg;
  cfg.noise = NoiseModel::noiseless();
  cfg.noise.roll_amplitude = 10 * kDeg;
  cfg.noise.roll_frequency = 0.5;
  cfg.noise.pitch_amplitude = 10 * kDeg;
  cfg.noise.pitch_frequency = 0.5;
  TiltFilter f;
  SimRng rng(1);
  double sq = 0.0;
  int n = 0;
  for (int i = 0; i <= 2000; ++i) {
    WorldState w;
    w.t = i * 0.01;
    w.surface = surface_attitude(cfg, w.t);
    const auto s = f.process(synth_imu(w, cfg.noise, rng));
    ASSERT_TRUE(s);
    sq += std::pow(s->roll - w.surface.roll, 2) + std::pow(s->pitch - w.surface.pitch, 2);
    n += 2;
  }
  EXPECT_LT(std::sqrt(sq / n), 0.5 * kDeg);
}

TEST(TiltConfig, Validate) {
  TiltConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.measurement_noise(0, 1) = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}
