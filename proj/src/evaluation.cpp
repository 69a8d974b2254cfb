#include "cap/evaluation.hpp"

#include <algorithm>
#include <cmath>

#include "cap/error.hpp"

namespace cap {

Association associate(std::span<const TimedPoint> estimates, std::span<const TimedPoint> truth,
                      double max_dt) {
  if (estimates.empty() || truth.empty() ||
      estimates.back().timestamp < truth.front().timestamp - max_dt ||
      estimates.front().timestamp > truth.back().timestamp + max_dt) {
    throw Error(ErrorCode::NoOverlap, "estimate and truth time ranges do not overlap");
  }
  Association out;
  for (const auto& e : estimates) {
    auto it = std::lower_bound(truth.begin(), truth.end(), e.timestamp,
                               [](const TimedPoint& p, double t) { return p.timestamp < t; });
    const TimedPoint* best = nullptr;
    if (it != truth.end()) best = &*it;
    if (it != truth.begin()) {
      const TimedPoint* prev = &*std::prev(it);
      if (best == nullptr ||
          std::abs(prev->timestamp - e.timestamp) <= std::abs(best->timestamp - e.timestamp)) {
        best = prev;
      }
    }
    if (best == nullptr || std::abs(best->timestamp - e.timestamp) > max_dt) {
      ++out.dropped;
      continue;
    }
    out.pairs.push_back({e.timestamp, e.position, best->position});
  }
  if (out.pairs.empty()) {
    throw Error(ErrorCode::NoOverlap, "no estimate has a truth sample inside the window");
  }
  return out;
}

double euclidean_error(const AlignedPair& pair) { return (pair.estimate - pair.truth).norm(); }

double med(std::span<const AlignedPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::EmptySeries, "MED of an empty series");
  double sum = 0.0;
  for (const auto& p : pairs) sum += euclidean_error(p);
  return sum / static_cast<double>(pairs.size());
}

Histogram histogram(std::span<const double> series, double bin_width) {
  if (!(bin_width > 0.0)) throw Error(ErrorCode::InvalidArgument, "bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  if (series.empty()) return h;
  const auto [mn, mx] = std::minmax_element(series.begin(), series.end());
  h.origin = *mn;
  const auto bins = static_cast<std::size_t>(std::floor((*mx - *mn) / bin_width)) + 1;
  h.counts.assign(bins, 0);
  for (double v : series) {
    auto i = static_cast<std::size_t>(std::floor((v - h.origin) / bin_width));
    h.counts[std::min(i, bins - 1)]++;
  }
  return h;
}

ErrorReport error_report(std::span<const AlignedPair> pairs, double bin_width) {
  ErrorReport r;
  r.count = pairs.size();
  r.med = med(pairs);
  r.axis_errors.reserve(pairs.size());
  r.euclidean.reserve(pairs.size());
  Vec3 sq = Vec3::Zero();
  Vec3 abs_sum = Vec3::Zero();
  for (const auto& p : pairs) {
    const Vec3 d = p.estimate - p.truth;
    r.axis_errors.push_back(d);
    r.euclidean.push_back(d.norm());
    sq += d.cwiseProduct(d);
    abs_sum += d.cwiseAbs();
    r.max_error = std::max(r.max_error, d.norm());
  }
  const double n = static_cast<double>(pairs.size());
  r.rmse = (sq / n).cwiseSqrt();
  r.mean_abs = abs_sum / n;
  r.histogram = histogram(r.euclidean, bin_width);
  return r;
}

RegressionResult tilt_error_regression(std::span<const double> errors,
                                       std::span<const double> pitch,
                                       std::span<const double> roll) {
  const std::size_t n = errors.size();
  if (pitch.size() != n || roll.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "regression series lengths differ");
  }
  if (n < 3) throw Error(ErrorCode::InvalidArgument, "regression needs at least 3 samples");

  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x(r, 0) = pitch[i];
    x(r, 1) = roll[i];
    x(r, 2) = 1.0;
    y(r) = errors[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  // Relative threshold on the R diagonal; constant or collinear regressors
  // fall below it.
  qr.setThreshold(1e-10);
  if (qr.rank() < 3) throw Error(ErrorCode::SingularDesign, "regressors are constant or collinear");
  const Eigen::Vector3d beta = qr.solve(y);

  const Eigen::VectorXd resid = y - x * beta;
  const double mean = y.mean();
  const double ss_tot = (y.array() - mean).square().sum();
  const double ss_res = resid.squaredNorm();
  double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  r2 = std::clamp(r2, 0.0, 1.0);
  return {beta(0), beta(1), beta(2), r2};
}

}  // namespace cap
