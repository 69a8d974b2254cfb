#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "cap/config.hpp"
#include "cap/dataset.hpp"
#include "cap/error.hpp"

using namespace cap;

TEST(Dataset, RoundTripEveryKind) {
  TagObservation tag;
  tag.timestamp = 0.5;
  tag.corners = {{{1.5, 2}, {3, 4}, {5, 6}, {7, 8.25}}};
  const std::vector<DatasetRecord> records{
      ImuSample{0.1, Vec3(0.01, -0.02, 0.03), Vec3(0.1, 0.2, -9.8)},
      SlamPose{0.2, 1.25, -0.5, 0.3},
      tag,
      RawDepth{0.6, 1.234567890123},
      TruthSample{0.7, Vec3(1, 2, -1.5)},
  };
  for (const auto& r : records) {
    const std::string line = to_jsonl(r);
    const DatasetRecord back = parse_record(line);
    EXPECT_EQ(back.index(), r.index());
    EXPECT_EQ(to_jsonl(back), line);
    EXPECT_EQ(record_time(back), record_time(r));
  }
}

TEST(Dataset, RejectsMalformed) {
  for (const char* bad : {"{", "[]", R"({"t":1})", R"({"t":1,"kind":"imu","gyro":[1,2],"accel":[1,2,3]})",
                          R"({"t":1,"kind":"tag","corners":[[1,2],[3,4],[5,6]]})", R"({"t":"x","kind":"depth","raw":1})",
                          R"({"t":1,"kind":"sonar"})"}) {
    try {
      parse_record(bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ParseError) << bad;
    }
  }
}

TEST(Dataset, ReaderReportsLineNumbers) {
  std::istringstream in(R"({"t":0.0,"kind":"depth","raw":1.0}

{"t":0.2,"kind":"depth","raw":1.0}
{"t":0.1,"kind":"depth","raw":1.0}
)");
  DatasetReader reader(in);
  EXPECT_TRUE(reader.next());
  EXPECT_TRUE(reader.next());
  try {
    reader.next();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ParseError);
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(Dataset, ReaderMalformedLine) {
  std::istringstream in("{\"t\":0.0,\"kind\":\"depth\",\"raw\":1.0}\n{\"t\":0.1,\"kind\":\"depth\"}\n");
  DatasetReader reader(in);
  reader.next();
  try {
    reader.next();
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(Dataset, EstimateRoundTrip) {
  PositionEstimate e;
  e.timestamp = 1.5;
  e.position = Vec3(0.1, 0.2, -1.3);
  e.method = Method::CD;
  e.ray_parameter = -0.6;
  const auto back = parse_estimate(to_jsonl(e));
  EXPECT_EQ(back.position, e.position);
  EXPECT_EQ(back.method, Method::CD);
  EXPECT_EQ(back.ray_parameter, -0.6);
  EXPECT_EQ(to_jsonl(back), to_jsonl(e));
}

TEST(RunConfig, Defaults) {
  const RunConfig cfg = run_config_from_json(nlohmann::json::object());
  EXPECT_EQ(cfg.seed, 1u);
  EXPECT_EQ(cfg.pipeline.tag.side_length, 0.15);
  EXPECT_EQ(cfg.simulation.trajectory.pattern, Pattern::Square);
}

TEST(RunConfig, ReadsKeys) {
  const auto j = nlohmann::json::parse(R"({
    "intrinsics": {"image_width": 640, "image_height": 480,
                   "camera_matrix": [[500, 0, 320], [0, 501, 240], [0, 0, 1]],
                   "distortion_coefficients": [0.1, 0, 0, 0, 0]},
    "extrinsics": {"translation": [0.1, 0, -0.05], "euler_zyx": [0, 0.03, 3.14159]},
    "body_height": 0.08, "tag_side": 0.2,
    "depth_calibration": {"scale": 1.1, "offset": 0.02},
    "staleness_bound": 0.3,
    "simulation": {"trajectory": {"pattern": "random", "duration": 30},
                   "noise": {"preset": "noiseless"}, "rates": {"synchronous": 30}},
    "pso": {"swarm_size": 12},
    "seed": 7
  })");
  const RunConfig cfg = run_config_from_json(j);
  EXPECT_EQ(cfg.pipeline.camera.fx, 500.0);
  EXPECT_EQ(cfg.pipeline.camera.width, 640);
  EXPECT_EQ(cfg.pipeline.rig.body_height, 0.08);
  EXPECT_EQ(cfg.pipeline.tag.side_length, 0.2);
  EXPECT_EQ(cfg.pipeline.depth_calibration.scale, 1.1);
  EXPECT_EQ(cfg.pipeline.estimator.staleness_bound, 0.3);
  EXPECT_EQ(cfg.simulation.trajectory.pattern, Pattern::Random);
  EXPECT_EQ(cfg.simulation.noise.pixel_sigma, 0.0);
  EXPECT_EQ(cfg.simulation.rates.imu, 30);
  EXPECT_EQ(cfg.simulation.camera.fx, 500.0);
  EXPECT_EQ(cfg.pso.swarm_size, 12);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_FALSE(cfg.warnings.empty());
}

TEST(RunConfig, BadValues) {
  for (const char* bad : {R"({"tag_side": "big"})", R"({"extrinsics": {"translation": [1, 2]}})",
                          R"({"simulation": {"trajectory": {"pattern": "spiral"}}})",
                          R"({"intrinsics_file": "/nonexistent/camera.json"})"}) {
    try {
      run_config_from_json(nlohmann::json::parse(bad));
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::ConfigError) << bad;
    }
  }
}

TEST(RunConfig, IntrinsicsRoundTrip) {
  const auto k = Intrinsics::reference();
  const auto back = intrinsics_from_json(intrinsics_to_json(k));
  EXPECT_EQ(back.fx, k.fx);
  EXPECT_EQ(back.cy, k.cy);
  EXPECT_EQ(back.height, k.height);
  const auto theta = calibration_from_json(calibration_to_json({1.02, -0.03}));
  EXPECT_EQ(theta.scale, 1.02);
  EXPECT_EQ(theta.offset, -0.03);
}
