// bladescan: stop-angle estimation, benchmarks, exposure runs and scene
// simulation from the command line.
//
// Exit codes: 0 success, 1 I/O or configuration error, 2 estimation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bladescan/bladescan.hpp"

namespace fs = std::filesystem;
using namespace bladescan;
using io::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTooling = 1;
constexpr int kExitEstimation = 2;

/// Scene document: either a bare scene object, or {"scene": {...}, "sweep",
/// "prior_offset", "replay", "sun", "inspection", "exposure"}.
struct SceneDoc {
  SceneSpec scene;
  SweepSpec sweep;
  Vector3 prior_offset{Vector3::Zero()};
  bool replay{false};
  SunModel sun;
  InspectionSpec inspection;
  ExposureConfig exposure;
};

SceneDoc load_scene_doc(const std::optional<std::string>& path) {
  SceneDoc doc;
  if (!path) return doc;
  const json j = io::load_json(*path);
  io::detail::require_object(j, "scene document");
  io::update_from_json(doc.scene, j.contains("scene") ? j["scene"] : j);
  if (j.contains("sweep")) io::update_from_json(doc.sweep, j["sweep"]);
  io::detail::read_opt(j, "prior_offset", doc.prior_offset);
  io::detail::read_opt(j, "replay", doc.replay);
  if (j.contains("sun")) io::update_from_json(doc.sun, j["sun"]);
  if (j.contains("inspection")) io::update_from_json(doc.inspection, j["inspection"]);
  if (j.contains("exposure")) io::update_from_json(doc.exposure, j["exposure"]);
  return doc;
}

/// --config may hold the section directly or wrap it under `key`.
const json& section(const json& j, const char* key) { return j.contains(key) ? j[key] : j; }

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    double v = 0.0;
    if (!io::detail::parse_double(io::detail::trim(item), v))
      throw Error(ErrorCode::InvalidConfig, std::string("bad number in ") + what + ": '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::InvalidConfig, std::string(what) + " is empty");
  return out;
}

Vector3 parse_vec3(const std::string& s, const char* what) {
  const auto v = parse_list(s, what);
  if (v.size() != 3) throw Error(ErrorCode::InvalidConfig, std::string(what) + " needs x,y,z");
  return {v[0], v[1], v[2]};
}

/// Writes to `out` or stdout.
template <typename F>
void emit(const std::optional<std::string>& out, F&& write) {
  if (!out || *out == "-") {
    write(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) throw Error(ErrorCode::Io, "cannot open " + *out + " for writing");
  write(f);
  if (!f) throw Error(ErrorCode::Io, "write failed: " + *out);
}

// --- estimate ---

struct EstimateArgs {
  std::optional<std::string> scene, cloud, config, out, prior, viewpoint;
  std::optional<std::uint64_t> seed;
  bool trace{false};
};

int cmd_estimate(const EstimateArgs& a) {
  if (a.scene.has_value() == a.cloud.has_value())
    throw Error(ErrorCode::InvalidConfig, "give exactly one of --scene or --cloud");
  EstimatorConfig cfg;
  if (a.config) io::update_from_json(cfg, section(io::load_json(*a.config), "estimator"));

  std::unique_ptr<ScanSource> source;
  Point3 prior;
  std::optional<GroundTruth> truth;
  if (a.scene) {
    SceneDoc doc = load_scene_doc(a.scene);
    if (a.seed) doc.scene.seed = *a.seed;
    prior = perturb_prior(doc.scene.hub_center, doc.prior_offset);
    if (a.prior) prior = parse_vec3(*a.prior, "--prior");
    truth = ground_truth(doc.scene);
    source = std::make_unique<SimulatedScanSource>(doc.scene, doc.sweep, prior, doc.replay);
  } else {
    if (!a.prior) throw Error(ErrorCode::InvalidConfig, "--cloud needs --prior x,y,z");
    prior = parse_vec3(*a.prior, "--prior");
    Scan scan;
    scan.cloud = io::read_cloud(*a.cloud);
    if (a.viewpoint) scan.viewpoint = parse_vec3(*a.viewpoint, "--viewpoint");
    source = std::make_unique<ReplayScanSource>(std::move(scan));
  }

  json result;
  int code = kExitOk;
  try {
    const TurbineEstimate est = estimate(*source, prior, cfg);
    result = io::to_json(est);
    if (a.trace) {
      result["trace"] = json::array();
      for (const auto& r : est.trace) result["trace"].push_back(io::to_json(r));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::InvalidSpec ||
        e.code() == ErrorCode::Io)
      throw;
    std::cerr << "estimation failed: " << e.what() << '\n';
    result = {{"error", to_string(e.code())}, {"message", e.what()}};
    code = kExitEstimation;
  }
  if (truth) {
    result["truth"] = {{"a_b_deg", truth->stop_angle_deg}, {"p_h", io::to_json(truth->hub)}};
    if (result.contains("a_b_deg"))
      result["truth"]["abs_error_deg"] =
          circular_distance_deg(result["a_b_deg"].get<double>(), truth->stop_angle_deg, 120.0);
  }
  emit(a.out, [&](std::ostream& os) { os << result.dump(2) << '\n'; });
  return code;
}

// --- benchmark ---

struct BenchmarkArgs {
  std::optional<std::string> config, scene, out, sweep, format;
  std::optional<int> trials;
  std::optional<std::uint64_t> seed;
  std::optional<double> noise, prior_error, dropout;
  std::optional<bool> clutter;
  bool replay{false}, timing{false};
};

int cmd_benchmark(const BenchmarkArgs& a) {
  BenchmarkSpec spec;
  spec.scene.noise_sigma = 0.05;
  spec.scene.clutter.enabled = true;
  if (a.config) io::update_from_json(spec, section(io::load_json(*a.config), "benchmark"));
  if (a.scene) {
    const SceneDoc doc = load_scene_doc(a.scene);
    spec.scene = doc.scene;
    spec.sweep = doc.sweep;
  }
  if (a.sweep) {
    spec.angles = parse_list(*a.sweep, "--sweep");
    if (!a.trials) spec.trials = static_cast<int>(spec.angles.size());
  }
  if (a.trials) spec.trials = *a.trials;
  if (a.seed) spec.seed = *a.seed;
  if (a.noise) spec.scene.noise_sigma = *a.noise;
  if (a.clutter) spec.scene.clutter.enabled = *a.clutter;
  if (a.prior_error) spec.prior_error_max = *a.prior_error;
  if (a.dropout) spec.sweep.sensor.dropout = *a.dropout;
  if (a.replay) spec.replay = true;
  spec.timing = a.timing;
  try {
    spec.sweep.sensor.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  const std::string format = a.format.value_or("json");
  const BenchmarkReport rep = run_benchmark(spec);
  emit(a.out, [&](std::ostream& os) {
    if (format == "csv")
      io::write_report_csv(os, rep);
    else
      os << io::to_json(rep).dump(2) << '\n';
  });
  return kExitOk;
}

// --- exposure ---

struct ExposureArgs {
  std::optional<std::string> scene, config, out, trace, format;
  std::optional<int> ticks;
  std::optional<double> gamma0;
  std::optional<std::uint64_t> seed;
};

int cmd_exposure(const ExposureArgs& a) {
  SceneDoc doc = load_scene_doc(a.scene);
  if (a.seed) doc.scene.seed = *a.seed;
  ExposureConfig cfg = doc.exposure;
  if (a.config) io::update_from_json(cfg, section(io::load_json(*a.config), "exposure"));
  const int ticks = a.ticks.value_or(60);
  if (ticks < 0) throw Error(ErrorCode::InvalidConfig, "--ticks must be >= 0");
  try {
    doc.sun.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }

  SimulatedInspectionSource source(doc.scene, doc.inspection, doc.sun);
  const ExposureTrace trace = run_exposure_loop(source, cfg, a.gamma0.value_or(0.0), ticks);
  const ExposureSummary summary = summarize_exposure(trace, cfg);

  if (a.trace) emit(a.trace, [&](std::ostream& os) { io::write_trace_jsonl(os, trace); });
  const std::string format = a.format.value_or("json");
  emit(a.out, [&](std::ostream& os) {
    if (format == "csv") {
      os << "tick,gamma_ev,mu_g,sigma,entropy,error\n";
      for (const auto& t : trace.ticks) {
        os << t.tick << ',' << io::detail::format_double(t.gamma_ev) << ',';
        if (t.stats)
          os << io::detail::format_double(t.stats->mean) << ','
             << io::detail::format_double(t.stats->stddev) << ','
             << io::detail::format_double(t.stats->entropy);
        else
          os << ",,";
        os << ',' << t.error << '\n';
      }
    } else {
      json j = io::to_json(summary);
      j["ticks"] = trace.ticks.size();
      j["gamma0_ev"] = a.gamma0.value_or(0.0);
      os << j.dump(2) << '\n';
    }
  });
  return kExitOk;
}

// --- simulate ---

struct SimulateArgs {
  std::optional<std::string> scene, out, image, truth;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma;
  bool full{false};
};

int cmd_simulate(const SimulateArgs& a) {
  SceneDoc doc = load_scene_doc(a.scene);
  if (a.seed) doc.scene.seed = *a.seed;
  const GeneratedScene gen = generate_cloud(doc.scene);
  const Point3 prior = perturb_prior(doc.scene.hub_center, doc.prior_offset);
  const PointCloud cloud =
      a.full ? gen.cloud
             : capture_sweep(gen.cloud, doc.sweep, prior, doc.scene.normal(),
                             doc.scene.seed ^ 0xD1B54A32D192ED03ULL, gen.normals);
  if (a.out) io::write_cloud(*a.out, cloud);

  if (a.image) {
    const GroundTruth& gt = gen.truth;
    const Point3 foot = gt.hub + doc.inspection.start_radius * gt.blade_directions[doc.inspection.blade];
    const CameraModel cam = CameraModel::look_at(doc.inspection.intrinsics,
                                                 foot + doc.inspection.standoff * gt.normal, foot);
    io::write_pgm(*a.image, render_image(doc.scene, cam, doc.sun, a.gamma.value_or(0.0)));
  }

  const GroundTruth& gt = gen.truth;
  json j = {{"a_b_deg", gt.stop_angle_deg},
            {"p_h", io::to_json(gt.hub)},
            {"normal", io::to_json(gt.normal)},
            {"bearings_deg", gt.bearings_deg},
            {"prior", io::to_json(prior)},
            {"viewpoint", io::to_json(prior + doc.sweep.standoff * doc.scene.normal())},
            {"points", cloud.size()}};
  emit(a.truth, [&](std::ostream& os) { os << j.dump(2) << '\n'; });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind-turbine blade stop-angle estimation and blade-priority exposure control"};
  app.require_subcommand(1);
  const auto formats = CLI::IsMember({"json", "csv"});

  EstimateArgs ea;
  auto* est = app.add_subcommand("estimate", "Estimate the blade stop angle from a cloud or a simulated scene");
  est->add_option("--scene", ea.scene, "Scene JSON; the scan is simulated")->check(CLI::ExistingFile);
  est->add_option("--cloud", ea.cloud, "Point cloud (.csv or binary .ply)")->check(CLI::ExistingFile);
  est->add_option("--config", ea.config, "Estimator config JSON")->check(CLI::ExistingFile);
  est->add_option("--prior", ea.prior, "Prior hub position x,y,z");
  est->add_option("--viewpoint", ea.viewpoint, "Sensor position x,y,z, orients the rotor normal");
  est->add_option("--seed", ea.seed, "Scene seed override");
  est->add_option("--out", ea.out, "Output JSON (default stdout)");
  est->add_flag("--trace", ea.trace, "Include per-iteration records");

  BenchmarkArgs ba;
  auto* bench = app.add_subcommand("benchmark", "Seeded stop-angle benchmark over simulated scenes");
  bench->add_option("--config", ba.config, "Benchmark manifest JSON")->check(CLI::ExistingFile);
  bench->add_option("--scene", ba.scene, "Scene JSON used as the per-trial template")->check(CLI::ExistingFile);
  bench->add_option("--trials", ba.trials, "Number of trials")->check(CLI::PositiveNumber);
  bench->add_option("--sweep", ba.sweep, "Comma-separated stop angles, cycled over trials");
  bench->add_option("--seed", ba.seed, "Master seed");
  bench->add_option("--noise", ba.noise, "Range noise sigma (m)")->check(CLI::NonNegativeNumber);
  bench->add_option("--clutter", ba.clutter, "Background clutter on/off");
  bench->add_option("--prior-error", ba.prior_error, "Max hub prior error (m)")->check(CLI::NonNegativeNumber);
  bench->add_option("--dropout", ba.dropout, "LiDAR dropout fraction")->check(CLI::Range(0.0, 1.0));
  bench->add_flag("--replay", ba.replay, "Reuse the first capture on every iteration");
  bench->add_flag("--timing", ba.timing, "Record per-trial wall time (report is then not reproducible)");
  bench->add_option("--out", ba.out, "Report path (default stdout)");
  bench->add_option("--format", ba.format, "json or csv")->check(formats);

  ExposureArgs xa;
  auto* expo = app.add_subcommand("exposure", "Run the exposure loop along a simulated blade pass");
  expo->add_option("--scene", xa.scene, "Scene JSON (may carry sun, inspection, exposure)")->check(CLI::ExistingFile);
  expo->add_option("--config", xa.config, "Exposure config JSON")->check(CLI::ExistingFile);
  expo->add_option("--gamma0", xa.gamma0, "Starting exposure offset (EV)");
  expo->add_option("--ticks", xa.ticks, "Maximum ticks (default 60)");
  expo->add_option("--seed", xa.seed, "Scene seed override");
  expo->add_option("--trace", xa.trace, "Per-tick JSON lines output");
  expo->add_option("--out", xa.out, "Summary JSON, or the tick table with --format csv");
  expo->add_option("--format", xa.format, "json or csv")->check(formats);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "Generate a scene scan, ground truth and optional image");
  sim->add_option("--scene", sa.scene, "Scene JSON")->check(CLI::ExistingFile);
  sim->add_option("--seed", sa.seed, "Scene seed override");
  sim->add_option("--out", sa.out, "Cloud output (.csv or .ply)");
  sim->add_flag("--full", sa.full, "Write the whole surface sample instead of the LiDAR sweep");
  sim->add_option("--image", sa.image, "Render the first inspection view to PGM");
  sim->add_option("--gamma", sa.gamma, "Exposure offset for --image (EV)");
  sim->add_option("--truth", sa.truth, "Ground truth JSON (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitTooling;
  }

  try {
    if (*est) return cmd_estimate(ea);
    if (*bench) return cmd_benchmark(ba);
    if (*expo) return cmd_exposure(xa);
    if (*sim) return cmd_simulate(sa);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTooling;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitTooling;
  }
  return kExitTooling;
}
