#include "cap/dataset.hpp"

#include <cmath>
#include <istream>
#include <json.hpp>

#include "cap/error.hpp"

namespace cap {

using ojson = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

ojson vec_json(const Vec3& v) { return ojson::array({v.x(), v.y(), v.z()}); }

double number(const ojson& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(ErrorCode::ParseError, std::string("missing or non-numeric field '") + key + "'");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(ErrorCode::ParseError, std::string("non-finite '") + key + "'");
  return v;
}

Vec3 vec3(const ojson& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_array() || it->size() != 3) {
    throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be an array of 3 numbers");
  }
  Vec3 v;
  for (int i = 0; i < 3; ++i) {
    const auto& e = (*it)[static_cast<std::size_t>(i)];
    if (!e.is_number()) throw Error(ErrorCode::ParseError, std::string("field '") + key + "' must be numeric");
    v(i) = e.get<double>();
  }
  if (!v.allFinite()) throw Error(ErrorCode::ParseError, std::string("non-finite '") + key + "'");
  return v;
}

ojson parse_object(std::string_view line) {
  ojson j;
  try {
    j = ojson::parse(line.begin(), line.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "record is not a JSON object");
  return j;
}

std::string kind_of(const ojson& j) {
  const auto it = j.find("kind");
  if (it == j.end() || !it->is_string()) throw Error(ErrorCode::ParseError, "missing 'kind'");
  return it->get<std::string>();
}

}  // namespace

double record_time(const DatasetRecord& r) {
  return std::visit([](const auto& s) { return s.timestamp; }, r);
}

std::string_view record_kind(const DatasetRecord& r) {
  return std::visit(overloaded{[](const ImuSample&) { return std::string_view("imu"); },
                               [](const SlamPose&) { return std::string_view("slam"); },
                               [](const TagObservation&) { return std::string_view("tag"); },
                               [](const RawDepth&) { return std::string_view("depth"); },
                               [](const TruthSample&) { return std::string_view("truth"); }},
                    r);
}

std::string to_jsonl(const DatasetRecord& r) {
  ojson j;
  j["t"] = record_time(r);
  j["kind"] = std::string(record_kind(r));
  std::visit(overloaded{[&](const ImuSample& s) {
                          j["gyro"] = vec_json(s.gyro);
                          j["accel"] = vec_json(s.accel);
                        },
                        [&](const SlamPose& s) {
                          j["x"] = s.x;
                          j["y"] = s.y;
                          j["yaw"] = s.yaw;
                        },
                        [&](const TagObservation& s) {
                          ojson corners = ojson::array();
                          for (const auto& c : s.corners) corners.push_back({c.u, c.v});
                          j["corners"] = std::move(corners);
                        },
                        [&](const RawDepth& s) { j["raw"] = s.raw; },
                        [&](const TruthSample& s) { j["p"] = vec_json(s.position); }},
             r);
  return j.dump();
}

DatasetRecord parse_record(std::string_view line) {
  const ojson j = parse_object(line);
  const double t = number(j, "t");
  const std::string kind = kind_of(j);

  if (kind == "imu") return ImuSample{t, vec3(j, "gyro"), vec3(j, "accel")};
  if (kind == "slam") return SlamPose{t, number(j, "x"), number(j, "y"), number(j, "yaw")};
  if (kind == "depth") return RawDepth{t, number(j, "raw")};
  if (kind == "truth") return TruthSample{t, vec3(j, "p")};
  if (kind == "tag") {
    const auto it = j.find("corners");
    if (it == j.end() || !it->is_array() || it->size() != 4) {
      throw Error(ErrorCode::ParseError, "'corners' must hold exactly 4 [u, v] pairs");
    }
    TagObservation obs;
    obs.timestamp = t;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& c = (*it)[i];
      if (!c.is_array() || c.size() != 2 || !c[0].is_number() || !c[1].is_number()) {
        throw Error(ErrorCode::ParseError, "'corners' must hold exactly 4 [u, v] pairs");
      }
      obs.corners[i] = {c[0].get<double>(), c[1].get<double>()};
      if (!std::isfinite(obs.corners[i].u) || !std::isfinite(obs.corners[i].v)) {
        throw Error(ErrorCode::ParseError, "non-finite corner");
      }
    }
    return obs;
  }
  throw Error(ErrorCode::ParseError, "unknown record kind '" + kind + "'");
}

std::optional<DatasetRecord> DatasetReader::next() {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DatasetRecord r;
    try {
      r = parse_record(line);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_) + ": " + e.what());
    }
    const double t = record_time(r);
    if (last_t_ && t < *last_t_) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_) + ": timestamp decreases");
    }
    last_t_ = t;
    return r;
  }
  return std::nullopt;
}

std::string to_jsonl(const PositionEstimate& e) {
  ojson j;
  j["t"] = e.timestamp;
  j["method"] = std::string(to_string(e.method));
  j["p"] = vec_json(e.position);
  if (e.method == Method::CPnP) {
    j["rms"] = e.reprojection_rms;
  } else {
    j["k"] = e.ray_parameter;
  }
  j["staleness"] = e.max_staleness;
  return j.dump();
}

PositionEstimate parse_estimate(std::string_view line) {
  const ojson j = parse_object(line);
  PositionEstimate e;
  e.timestamp = number(j, "t");
  const auto it = j.find("method");
  if (it == j.end() || !it->is_string()) throw Error(ErrorCode::ParseError, "missing 'method'");
  const auto m = it->get<std::string>();
  if (m == "cpnp") {
    e.method = Method::CPnP;
    if (j.contains("rms")) e.reprojection_rms = number(j, "rms");
  } else if (m == "cd") {
    e.method = Method::CD;
    if (j.contains("k")) e.ray_parameter = number(j, "k");
  } else {
    throw Error(ErrorCode::ParseError, "unknown method '" + m + "'");
  }
  e.position = vec3(j, "p");
  if (j.contains("staleness")) e.max_staleness = number(j, "staleness");
  return e;
}

}  // namespace cap
