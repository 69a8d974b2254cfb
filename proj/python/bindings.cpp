#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cap/calibration.hpp"
#include "cap/camera.hpp"
#include "cap/config.hpp"
#include "cap/dataset.hpp"
#include "cap/error.hpp"
#include "cap/evaluation.hpp"
#include "cap/geometry.hpp"
#include "cap/pipeline.hpp"
#include "cap/simulator.hpp"

namespace py = pybind11;
using namespace cap;

namespace {

using Corners = std::array<std::array<double, 2>, 4>;

TagObservation to_observation(const Corners& c, double t) {
  TagObservation obs;
  obs.timestamp = t;
  for (std::size_t i = 0; i < 4; ++i) obs.corners[i] = {c[i][0], c[i][1]};
  return obs;
}

RunConfig config_from(const std::string& config_json) {
  if (config_json.empty()) return {};
  return run_config_from_json(nlohmann::json::parse(config_json));
}

std::vector<std::string> simulate(const std::string& config_json, const std::string& pattern,
                                  std::optional<double> duration, std::optional<std::uint64_t> seed,
                                  bool noiseless) {
  RunConfig cfg = noiseless ? noiseless_run_config(pattern_from_string(pattern)) : config_from(config_json);
  if (!noiseless) cfg.simulation.trajectory.pattern = pattern_from_string(pattern);
  if (seed) cfg.apply_seed(*seed);
  if (duration) cfg.simulation.trajectory.duration = *duration;
  Simulator sim(cfg.simulation);
  std::vector<std::string> lines;
  sim.run([&](const DatasetRecord& r) { lines.push_back(to_jsonl(r)); });
  return lines;
}

std::vector<std::string> estimate(const std::vector<std::string>& lines, const std::string& method,
                                  const std::string& config_json, bool noiseless) {
  RunConfig cfg = noiseless ? noiseless_run_config(Pattern::Square) : config_from(config_json);
  if (method != "cpnp" && method != "cd" && method != "both") {
    throw Error(ErrorCode::InvalidArgument, "method must be cpnp, cd or both");
  }
  cfg.pipeline.run_cpnp = method != "cd";
  cfg.pipeline.run_cd = method != "cpnp";
  std::vector<std::string> out;
  EstimationPipeline pipeline(cfg.pipeline);
  const auto sink = [&](const PositionEstimate& e) { out.push_back(to_jsonl(e)); };
  for (const auto& l : lines) pipeline.consume(parse_record(l), sink);
  pipeline.finish(sink);
  return out;
}

py::dict evaluate(const std::vector<std::string>& estimates, const std::vector<std::string>& dataset,
                  double max_dt) {
  std::vector<TimedPoint> truth;
  for (const auto& l : dataset) {
    const auto r = parse_record(l);
    if (const auto* t = std::get_if<TruthSample>(&r)) truth.push_back({t->timestamp, t->position});
  }
  std::map<std::string, std::vector<TimedPoint>> series;
  for (const auto& l : estimates) {
    const auto e = parse_estimate(l);
    series[std::string(to_string(e.method))].push_back({e.timestamp, e.position});
  }
  py::dict out;
  for (const auto& [name, points] : series) {
    const auto a = associate(points, truth, max_dt);
    const auto r = error_report(a.pairs);
    py::dict d;
    d["count"] = r.count;
    d["dropped"] = a.dropped;
    d["med"] = r.med;
    d["rmse"] = r.rmse;
    d["mean_abs"] = r.mean_abs;
    d["max_error"] = r.max_error;
    out[py::str(name)] = d;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Collaborative aquatic positioning core";

  py::register_exception<Error>(m, "CapError", PyExc_RuntimeError);

  py::class_<RigidTransform>(m, "RigidTransform")
      .def(py::init<>())
      .def(py::init<const Mat3&, const Vec3&>(), py::arg("rotation"), py::arg("translation"))
      .def_static(
          "from_euler",
          [](double yaw, double pitch, double roll, const Vec3& t) {
            return RigidTransform::from_euler({yaw, pitch, roll}, t);
          },
          py::arg("yaw"), py::arg("pitch"), py::arg("roll"), py::arg("translation") = Vec3::Zero())
      .def_property_readonly("rotation", &RigidTransform::rotation)
      .def_property_readonly("translation", &RigidTransform::translation)
      .def("matrix", &RigidTransform::matrix)
      .def("__matmul__", [](const RigidTransform& a, const RigidTransform& b) { return compose(a, b); });

  m.def("transform_point", &transform_point, py::arg("h"), py::arg("p"));
  m.def("compose", &compose, py::arg("a"), py::arg("b"));
  m.def("invert", &invert, py::arg("h"));
  m.def(
      "euler_zyx_to_rotation",
      [](double yaw, double pitch, double roll) { return euler_zyx_to_rotation({yaw, pitch, roll}); },
      py::arg("yaw"), py::arg("pitch"), py::arg("roll"));
  m.def(
      "line_from_points",
      [](const Vec3& a, const Vec3& b) {
        const auto l = line_from_points(a, b);
        return py::make_tuple(l.point, l.direction);
      },
      py::arg("a"), py::arg("b"), "Returns (point, direction) with point = b, direction = a - b.");
  m.def(
      "intersect_with_zplane",
      [](const Vec3& point, const Vec3& direction, double z) { return intersect_with_zplane({point, direction}, z); },
      py::arg("point"), py::arg("direction"), py::arg("z_plane"));

  py::class_<Intrinsics>(m, "Intrinsics")
      .def(py::init<>())
      .def_static("reference", &Intrinsics::reference)
      .def_readwrite("fx", &Intrinsics::fx)
      .def_readwrite("fy", &Intrinsics::fy)
      .def_readwrite("cx", &Intrinsics::cx)
      .def_readwrite("cy", &Intrinsics::cy)
      .def_readwrite("width", &Intrinsics::width)
      .def_readwrite("height", &Intrinsics::height)
      .def("matrix", &Intrinsics::matrix);

  m.def(
      "back_project", [](const Intrinsics& k, double u, double v) { return back_project(k, {u, v}); },
      py::arg("k"), py::arg("u"), py::arg("v"));
  m.def(
      "project_point",
      [](const Intrinsics& k, const Vec3& p) {
        const auto px = project_point(k, p);
        return py::make_tuple(px.u, px.v);
      },
      py::arg("k"), py::arg("p_cam"));
  m.def(
      "tag_center_pixel",
      [](const Corners& c) {
        const auto px = tag_center_pixel(to_observation(c, 0.0));
        return py::make_tuple(px.u, px.v);
      },
      py::arg("corners"));
  m.def(
      "solve_pnp_planar",
      [](const Intrinsics& k, const Corners& c, double side) {
        const auto pose = solve_pnp_planar(k, TagGeometry{side}, to_observation(c, 0.0));
        return py::make_tuple(pose.camera_from_marker, pose.reprojection_rms);
      },
      py::arg("k"), py::arg("corners"), py::arg("side_length") = 0.15,
      "Returns (camera_from_marker, reprojection_rms).");

  m.def(
      "accel_to_tilt",
      [](const Vec3& a) {
        const auto t = accel_to_tilt(a);
        return py::make_tuple(t.roll, t.pitch);
      },
      py::arg("accel"));

  py::class_<TiltFilter>(m, "TiltFilter")
      .def(py::init([]() { return TiltFilter(); }))
      .def(
          "process",
          [](TiltFilter& f, double t, const Vec3& gyro, const Vec3& accel) -> py::object {
            const auto s = f.process({t, gyro, accel});
            if (!s) return py::none();
            return py::make_tuple(s->roll, s->pitch);
          },
          py::arg("t"), py::arg("gyro"), py::arg("accel"));

  m.def(
      "calibrate_depth",
      [](const std::vector<double>& raw, const std::vector<double>& truth, std::uint64_t seed) {
        if (raw.size() != truth.size()) throw Error(ErrorCode::InvalidArgument, "raw and truth lengths differ");
        std::vector<CalibrationPair> pairs;
        for (std::size_t i = 0; i < raw.size(); ++i) pairs.push_back({raw[i], truth[i]});
        PsoConfig cfg;
        cfg.seed = seed;
        const auto theta = calibrate(pairs, cfg);
        return py::make_tuple(theta.scale, theta.offset);
      },
      py::arg("raw"), py::arg("truth"), py::arg("seed") = 1, "Returns (scale, offset).");

  m.def(
      "med",
      [](const Eigen::MatrixX3d& est, const Eigen::MatrixX3d& truth) {
        if (est.rows() != truth.rows()) throw Error(ErrorCode::InvalidArgument, "row counts differ");
        std::vector<AlignedPair> pairs;
        for (Eigen::Index i = 0; i < est.rows(); ++i) pairs.push_back({0.0, est.row(i).transpose(), truth.row(i).transpose()});
        return med(pairs);
      },
      py::arg("estimates"), py::arg("truth"));
  m.def(
      "tilt_error_regression",
      [](const std::vector<double>& e, const std::vector<double>& p, const std::vector<double>& r) {
        const auto fit = tilt_error_regression(e, p, r);
        py::dict d;
        d["pitch_coef"] = fit.pitch_coef;
        d["roll_coef"] = fit.roll_coef;
        d["intercept"] = fit.intercept;
        d["r_squared"] = fit.r_squared;
        return d;
      },
      py::arg("errors"), py::arg("pitch"), py::arg("roll"));

  m.def("simulate", &simulate, py::arg("config_json") = "", py::arg("pattern") = "square",
        py::arg("duration") = py::none(), py::arg("seed") = py::none(), py::arg("noiseless") = false,
        "Runs the simulator and returns the dataset as JSONL lines.");
  m.def("estimate", &estimate, py::arg("lines"), py::arg("method") = "both", py::arg("config_json") = "",
        py::arg("noiseless") = false, "Runs the estimation pipeline over JSONL dataset lines.");
  m.def("evaluate", &evaluate, py::arg("estimates"), py::arg("dataset"), py::arg("max_dt") = 0.02,
        "Per-method error summary against the dataset's truth records.");
}
