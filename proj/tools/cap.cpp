// Command-line front end: simulate, estimate, evaluate, calibrate-depth.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cap/calibration.hpp"
#include "cap/config.hpp"
#include "cap/dataset.hpp"
#include "cap/error.hpp"
#include "cap/evaluation.hpp"
#include "cap/pipeline.hpp"
#include "cap/simulator.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

cap::RunConfig load_config(const Common& c) {
  try {
    cap::RunConfig cfg = c.config.empty() ? cap::RunConfig{} : cap::load_run_config(c.config);
    if (c.seed) cfg.apply_seed(*c.seed);
    for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << '\n';
    return cfg;
  } catch (const cap::Error& e) {
    throw UsageError(e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

// simulate ------------------------------------------------------------------

int cmd_simulate(const Common& c, const std::string& pattern, std::optional<double> duration) {
  cap::RunConfig cfg = load_config(c);
  try {
    if (!pattern.empty()) cfg.simulation.trajectory.pattern = cap::pattern_from_string(pattern);
    if (duration) cfg.simulation.trajectory.duration = *duration;
    cfg.simulation.validate();
  } catch (const cap::Error& e) {
    throw UsageError(e.what());
  }

  cap::Simulator sim(cfg.simulation);
  std::ofstream out = open_out(c.out);
  const cap::SimulationSummary s = sim.run([&](const cap::DatasetRecord& r) { out << cap::to_jsonl(r) << '\n'; });
  if (!out) throw std::runtime_error("write failed for '" + c.out + "'");

  std::cerr << "simulated " << s.ticks << " ticks: " << s.imu << " imu, " << s.slam << " slam, "
            << s.tags << " tag, " << s.depth << " depth, " << s.truth << " truth; tag in view "
            << s.frames_in_view << "/" << s.camera_frames << '\n';
  return kOk;
}

// estimate ------------------------------------------------------------------

int cmd_estimate(const Common& c, const std::string& dataset, const std::string& method) {
  cap::RunConfig cfg = load_config(c);
  cfg.pipeline.run_cpnp = method != "cd";
  cfg.pipeline.run_cd = method != "cpnp";

  std::ifstream in = open_in(dataset);
  std::ofstream out = open_out(c.out);

  std::size_t written = 0;
  cap::EstimationPipeline pipeline(cfg.pipeline, [](double t, cap::Method m, const cap::Error& e) {
    std::fprintf(stderr, "skip t=%.6f %s: %s\n", t, std::string(cap::to_string(m)).c_str(), e.what());
  });
  const auto sink = [&](const cap::PositionEstimate& e) {
    out << cap::to_jsonl(e) << '\n';
    ++written;
  };

  cap::DatasetReader reader(in);
  while (auto record = reader.next()) pipeline.consume(*record, sink);
  pipeline.finish(sink);
  if (!out) throw std::runtime_error("write failed for '" + c.out + "'");

  if (pipeline.frames() == 0) std::cerr << "warning: dataset contains no tag observations\n";
  if (written == 0) std::cerr << "warning: no estimates written\n";
  std::cerr << "frames " << pipeline.frames() << ", estimates " << written;
  for (const auto& [code, n] : pipeline.skipped()) std::cerr << ", " << cap::to_string(code) << " " << n;
  std::cerr << '\n';
  return kOk;
}

// evaluate ------------------------------------------------------------------

nlohmann::ordered_json vec_json(const cap::Vec3& v) { return {v.x(), v.y(), v.z()}; }

int cmd_evaluate(const Common& c, const std::string& estimates, const std::string& dataset,
                 const std::string& csv_path, double max_dt) {
  std::vector<cap::TimedPoint> truth;
  {
    std::ifstream in = open_in(dataset);
    cap::DatasetReader reader(in);
    while (auto r = reader.next()) {
      if (const auto* t = std::get_if<cap::TruthSample>(&*r)) truth.push_back({t->timestamp, t->position});
    }
  }
  if (truth.empty()) throw std::runtime_error("dataset has no truth records");

  std::map<std::string, std::vector<cap::TimedPoint>> series;
  {
    std::ifstream in = open_in(estimates);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const cap::PositionEstimate e = cap::parse_estimate(line);
        series[std::string(cap::to_string(e.method))].push_back({e.timestamp, e.position});
      } catch (const cap::Error& e) {
        throw cap::Error(cap::ErrorCode::ParseError, "line " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  if (series.empty()) throw cap::Error(cap::ErrorCode::EmptySeries, "no estimates to evaluate");

  nlohmann::ordered_json report = nlohmann::ordered_json::object();
  std::ostringstream csv;
  csv.precision(17);
  csv << "method,t,ex,ey,ez,error\n";
  for (const auto& [name, points] : series) {
    const cap::Association a = cap::associate(points, truth, max_dt);
    const cap::ErrorReport r = cap::error_report(a.pairs);
    report[name] = {
        {"count", r.count},
        {"dropped", a.dropped},
        {"med", r.med},
        {"rmse", vec_json(r.rmse)},
        {"mean_abs", vec_json(r.mean_abs)},
        {"max_error", r.max_error},
        {"histogram",
         {{"origin", r.histogram.origin}, {"bin_width", r.histogram.bin_width}, {"counts", r.histogram.counts}}},
    };
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
      const cap::Vec3& e = r.axis_errors[i];
      csv << name << ',' << a.pairs[i].timestamp << ',' << e.x() << ',' << e.y() << ',' << e.z() << ','
          << r.euclidean[i] << '\n';
    }
    std::printf("%s MED %.9g m (%zu pairs, %zu dropped)\n", name.c_str(), r.med, r.count, a.dropped);
  }

  std::ofstream out = open_out(c.out);
  out << report.dump(2) << '\n';
  std::string csv_file = csv_path;
  if (csv_file.empty()) {
    csv_file = c.out;
    if (const auto dot = csv_file.rfind('.'); dot != std::string::npos && csv_file.find('/', dot) == std::string::npos)
      csv_file.erase(dot);
    csv_file += ".csv";
  }
  std::ofstream csv_out = open_out(csv_file);
  csv_out << csv.str();
  if (!out || !csv_out) throw std::runtime_error("write failed");
  return kOk;
}

// calibrate-depth -----------------------------------------------------------

std::vector<cap::CalibrationPair> read_pairs(const std::string& path) {
  std::ifstream in = open_in(path);
  std::vector<cap::CalibrationPair> pairs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) throw std::invalid_argument("expected raw,truth");
      std::size_t used = 0;
      const double raw = std::stod(line.substr(0, comma), &used);
      const std::string rest = line.substr(comma + 1);
      const double truth = std::stod(rest, &used);
      if (rest.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument("trailing data");
      pairs.push_back({raw, truth});
    } catch (const std::exception&) {
      // A leading header line is allowed.
      if (n == 1 && pairs.empty()) continue;
      throw cap::Error(cap::ErrorCode::ParseError, path + ": line " + std::to_string(n) + ": expected raw,truth");
    }
  }
  return pairs;
}

int cmd_calibrate(const Common& c, const std::string& pairs_path) {
  cap::RunConfig cfg = load_config(c);
  try {
    cfg.pso.validate();
  } catch (const cap::Error& e) {
    throw UsageError(e.what());
  }
  const auto pairs = read_pairs(pairs_path);
  const cap::CalibrationParams theta = cap::calibrate(pairs, cfg.pso);
  std::ofstream out = open_out(c.out);
  out << cap::calibration_to_json(theta).dump(2) << '\n';
  std::printf("scale %.9f offset %.9f cost %.9g\n", theta.scale, theta.offset,
              cap::calibration_cost(theta, pairs));
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  if (needs_config) sub->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  if (needs_config) sub->add_option("--seed", c.seed, "overrides the configured seed");
  sub->add_option("--out", c.out, "output file")->required();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative aquatic positioning: simulation, estimation and evaluation"};
  app.require_subcommand(1);

  Common common;

  auto* sim = app.add_subcommand("simulate", "write a synthetic JSONL dataset");
  add_common(sim, common);
  std::string pattern;
  std::optional<double> duration;
  sim->add_option("--pattern", pattern, "square, lawnmower or random")
      ->check(CLI::IsMember({"square", "lawnmower", "random"}));
  sim->add_option("--duration", duration, "seconds");

  auto* est = app.add_subcommand("estimate", "estimate marker positions from a dataset");
  add_common(est, common);
  std::string dataset;
  std::string method = "both";
  est->add_option("dataset", dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  est->add_option("--method", method, "cpnp, cd or both")->check(CLI::IsMember({"cpnp", "cd", "both"}));

  auto* ev = app.add_subcommand("evaluate", "compare estimates with dataset truth");
  add_common(ev, common, false);
  std::string estimates;
  std::string truth_dataset;
  std::string csv_path;
  double max_dt = 0.02;
  ev->add_option("estimates", estimates, "estimate JSONL")->required()->check(CLI::ExistingFile);
  ev->add_option("dataset", truth_dataset, "dataset with truth records")->required()->check(CLI::ExistingFile);
  ev->add_option("--csv", csv_path, "error series CSV (default: --out with .csv)");
  ev->add_option("--max-dt", max_dt, "association window, s")->check(CLI::PositiveNumber);

  auto* cal = app.add_subcommand("calibrate-depth", "fit depth scale/offset with PSO");
  add_common(cal, common);
  std::string pairs_path;
  cal->add_option("pairs", pairs_path, "CSV of raw,truth")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) return cmd_simulate(common, pattern, duration);
    if (*est) return cmd_estimate(common, dataset, method);
    if (*ev) return cmd_evaluate(common, estimates, truth_dataset, csv_path, max_dt);
    if (*cal) return cmd_calibrate(common, pairs_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
