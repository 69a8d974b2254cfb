#include "cap/pipeline.hpp"

#include <type_traits>

namespace cap {

EstimationPipeline::EstimationPipeline(PipelineConfig cfg, SkipHandler on_skip)
    : cfg_(std::move(cfg)), on_skip_(std::move(on_skip)), filter_(cfg_.ekf) {
  cfg_.camera.validate();
}

void EstimationPipeline::consume(const DatasetRecord& record, const Sink& sink) {
  const double t = record_time(record);
  if (!pending_.empty() && t > pending_.back()) flush(sink);

  std::visit(
      [&](const auto& r) {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, ImuSample>) {
          if (const auto s = filter_.process(r)) sync_.push(TiltSample{r.timestamp, s->roll, s->pitch});
        } else if constexpr (std::is_same_v<T, SlamPose>) {
          sync_.push(r);
        } else if constexpr (std::is_same_v<T, RawDepth>) {
          sync_.push(apply_calibration(cfg_.depth_calibration, r.raw, r.timestamp));
        } else if constexpr (std::is_same_v<T, TagObservation>) {
          sync_.push(r);
          pending_.push_back(r.timestamp);
        }
      },
      record);
}

void EstimationPipeline::finish(const Sink& sink) { flush(sink); }

void EstimationPipeline::flush(const Sink& sink) {
  for (double t : pending_) estimate(t, sink);
  if (!pending_.empty()) sync_.discard_before(pending_.back());
  pending_.clear();
}

void EstimationPipeline::estimate(double t, const Sink& sink) {
  ++frames_;
  auto skip = [&](Method m, const Error& e) {
    ++skipped_[e.code()];
    if (on_skip_) on_skip_(t, m, e);
  };

  SensorFrameBundle bundle;
  try {
    bundle = sync_.bundle_at(t);
  } catch (const Error& e) {
    if (cfg_.run_cpnp) skip(Method::CPnP, e);
    if (cfg_.run_cd) skip(Method::CD, e);
    return;
  }
  if (cfg_.run_cpnp) {
    try {
      sink(estimate_cpnp(bundle, cfg_.rig, cfg_.camera, cfg_.tag, cfg_.estimator));
    } catch (const Error& e) {
      skip(Method::CPnP, e);
    }
  }
  if (cfg_.run_cd) {
    try {
      sink(estimate_cd(bundle, cfg_.rig, cfg_.camera, cfg_.estimator));
    } catch (const Error& e) {
      skip(Method::CD, e);
    }
  }
}

std::vector<PositionEstimate> estimate_all(const std::vector<DatasetRecord>& records,
                                           const PipelineConfig& cfg) {
  std::vector<PositionEstimate> out;
  EstimationPipeline pipeline(cfg);
  const auto sink = [&](const PositionEstimate& e) { out.push_back(e); };
  for (const auto& r : records) pipeline.consume(r, sink);
  pipeline.finish(sink);
  return out;
}

}  // namespace cap
