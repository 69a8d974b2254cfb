#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <vector>

#include "cap/attitude.hpp"
#include "cap/calibration.hpp"
#include "cap/camera.hpp"
#include "cap/dataset.hpp"
#include "cap/error.hpp"
#include "cap/estimators.hpp"

namespace cap {

struct PipelineConfig {
  Intrinsics camera = Intrinsics::reference();
  RigExtrinsics rig = RigExtrinsics::reference();
  TagGeometry tag;
  CalibrationParams depth_calibration{1.02, -0.03};
  TiltConfig ekf;
  EstimatorOptions estimator;
  bool run_cpnp = true;
  bool run_cd = true;
};

/// Streams dataset records through the tilt filter, the synchroniser and the
/// estimators. A tag frame is estimated once a record with a later timestamp
/// arrives (or at finish()), so samples sharing the tag's timestamp are
/// always visible to it regardless of their order in the file. Memory use is
/// bounded independent of the stream length.
class EstimationPipeline {
 public:
  using Sink = std::function<void(const PositionEstimate&)>;
  using SkipHandler = std::function<void(double t, Method m, const Error& e)>;

  explicit EstimationPipeline(PipelineConfig cfg, SkipHandler on_skip = {});

  void consume(const DatasetRecord& record, const Sink& sink);
  void finish(const Sink& sink);

  std::size_t frames() const { return frames_; }
  /// Skipped frame counts keyed by error code.
  const std::map<ErrorCode, std::size_t>& skipped() const { return skipped_; }

 private:
  void flush(const Sink& sink);
  void estimate(double t, const Sink& sink);

  PipelineConfig cfg_;
  SkipHandler on_skip_;
  TiltFilter filter_;
  Synchronizer sync_;
  std::vector<double> pending_;
  std::size_t frames_ = 0;
  std::map<ErrorCode, std::size_t> skipped_;
};

/// Convenience wrapper: runs the pipeline over an in-memory record stream.
std::vector<PositionEstimate> estimate_all(const std::vector<DatasetRecord>& records,
                                           const PipelineConfig& cfg);

}  // namespace cap
