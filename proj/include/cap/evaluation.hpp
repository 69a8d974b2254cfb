#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cap/geometry.hpp"

namespace cap {

struct AlignedPair {
  double timestamp = 0.0;
  Vec3 estimate = Vec3::Zero();
  Vec3 truth = Vec3::Zero();
};

struct TimedPoint {
  double timestamp = 0.0;
  Vec3 position = Vec3::Zero();
};

struct Association {
  std::vector<AlignedPair> pairs;
  std::size_t dropped = 0;  // estimates with no truth sample inside the window
};

/// Nearest-timestamp association against a time-sorted truth series.
/// Throws NoOverlap when the two series' time ranges do not intersect.
Association associate(std::span<const TimedPoint> estimates, std::span<const TimedPoint> truth,
                      double max_dt = 0.02);

double euclidean_error(const AlignedPair& pair);

/// Mean Euclidean distance. Throws EmptySeries for an empty input.
double med(std::span<const AlignedPair> pairs);

struct Histogram {
  double origin = 0.0;  // left edge of bin 0
  double bin_width = 0.0;
  std::vector<std::size_t> counts;
};

/// Bins [origin + i*w, origin + (i+1)*w) with origin = min(series). Throws
/// InvalidArgument for a non-positive width.
Histogram histogram(std::span<const double> series, double bin_width = 0.010);

struct ErrorReport {
  std::size_t count = 0;
  double med = 0.0;
  Vec3 rmse = Vec3::Zero();
  Vec3 mean_abs = Vec3::Zero();
  double max_error = 0.0;
  std::vector<Vec3> axis_errors;     // estimate - truth
  std::vector<double> euclidean;
  Histogram histogram;
};

ErrorReport error_report(std::span<const AlignedPair> pairs, double bin_width = 0.010);

struct RegressionResult {
  double pitch_coef = 0.0;
  double roll_coef = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// OLS of error on (pitch, roll, 1). Throws InvalidArgument on length
/// mismatch or n < 3 and SingularDesign when the design is rank deficient.
RegressionResult tilt_error_regression(std::span<const double> errors,
                                       std::span<const double> pitch,
                                       std::span<const double> roll);

}  // namespace cap
