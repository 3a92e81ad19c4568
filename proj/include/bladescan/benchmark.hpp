// Seeded desk-scale benchmarks: stop-angle estimation over simulated scenes
// and exposure-loop summaries.

#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "bladescan/angle_estimator.hpp"
#include "bladescan/exposure.hpp"
#include "bladescan/scene_sim.hpp"

namespace bladescan {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Error charged to a failed trial when the mean is taken over all trials:
/// the largest possible distance on the 120° circle.
inline constexpr double kFailedTrialErrorDeg = 60.0;

struct BenchmarkSpec {
  int trials{120};
  std::vector<double> angles;  ///< stop angles, cycled; empty draws uniform [0, 120)
  std::uint64_t seed{1};
  double prior_error_min{0.0};  ///< hub prior offset magnitude range (m)
  double prior_error_max{2.0};
  bool replay{false};   ///< every iteration sees the same capture
  bool timing{false};   ///< record wall time (breaks byte-identical reports)
  SceneSpec scene{};    ///< template; stop angle, seeds and clutter layout are per trial
  SweepSpec sweep{};
  EstimatorConfig estimator{};

  void validate() const {
    if (trials < 1) throw Error(ErrorCode::InvalidConfig, "trials must be >= 1");
    if (!(0.0 <= prior_error_min && prior_error_min <= prior_error_max))
      throw Error(ErrorCode::InvalidConfig, "need 0 <= prior_error_min <= prior_error_max");
    for (double a : angles)
      if (!(a >= 0.0 && a < 120.0)) throw Error(ErrorCode::InvalidConfig, "sweep angles must be in [0, 120)");
    scene.validate();
    estimator.validate();
  }
};

struct TrialResult {
  int index{0};
  std::uint64_t seed{0};
  double true_angle_deg{0.0};
  std::optional<double> estimated_angle_deg;
  std::optional<double> abs_error_deg;
  bool success{false};
  int iterations{0};
  std::string error;  ///< error code name on failure
  std::optional<double> wall_ms;
};

struct BenchmarkReport {
  std::vector<TrialResult> trials;
  int successes{0};
  double success_rate{0.0};
  std::optional<double> mean_error_deg;  ///< over successful trials
  double mean_error_all_deg{0.0};        ///< failures charged kFailedTrialErrorDeg
  std::uint64_t seed{0};
};

/// Scene and prior for trial `index`, fully determined by (spec, index).
struct TrialSetup {
  SceneSpec scene;
  Point3 prior{Point3::Zero()};
  std::uint64_t seed{0};
};

inline TrialSetup make_trial(const BenchmarkSpec& spec, int index) {
  TrialSetup t;
  t.seed = splitmix64(spec.seed ^ splitmix64(static_cast<std::uint64_t>(index)));
  std::mt19937_64 rng(t.seed);
  t.scene = spec.scene;
  if (spec.angles.empty()) {
    std::uniform_real_distribution<double> ua(0.0, 120.0);
    t.scene.stop_angle_deg = ua(rng);
  } else {
    t.scene.stop_angle_deg = spec.angles[static_cast<std::size_t>(index) % spec.angles.size()];
  }
  t.scene.seed = rng();
  t.scene.clutter.layout_seed = rng();
  t.prior = t.scene.hub_center + random_offset(spec.prior_error_min, spec.prior_error_max, rng);
  return t;
}

inline TrialResult run_trial(const BenchmarkSpec& spec, int index) {
  const TrialSetup setup = make_trial(spec, index);
  TrialResult r;
  r.index = index;
  r.seed = setup.seed;
  r.true_angle_deg = setup.scene.stop_angle_deg;
  SimulatedScanSource source(setup.scene, spec.sweep, setup.prior, spec.replay);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const TurbineEstimate est = estimate(source, setup.prior, spec.estimator);
    r.success = true;
    r.iterations = est.iterations;
    r.estimated_angle_deg = est.stop_angle_deg;
    r.abs_error_deg = circular_distance_deg(est.stop_angle_deg, r.true_angle_deg, 120.0);
  } catch (const EstimationFailure& e) {
    r.iterations = e.partial().iterations;
    r.error = to_string(e.code());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig || e.code() == ErrorCode::InvalidSpec) throw;
    r.iterations = source.captures();
    r.error = to_string(e.code());
  }
  if (spec.timing)
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline BenchmarkReport summarize(std::vector<TrialResult> trials, std::uint64_t seed) {
  BenchmarkReport rep;
  rep.seed = seed;
  rep.trials = std::move(trials);
  double sum_ok = 0.0, sum_all = 0.0;
  for (const auto& t : rep.trials) {
    if (t.success) {
      ++rep.successes;
      sum_ok += *t.abs_error_deg;
      sum_all += *t.abs_error_deg;
    } else {
      sum_all += kFailedTrialErrorDeg;
    }
  }
  const auto n = static_cast<double>(rep.trials.size());
  if (!rep.trials.empty()) {
    rep.success_rate = rep.successes / n;
    rep.mean_error_all_deg = sum_all / n;
  }
  if (rep.successes > 0) rep.mean_error_deg = sum_ok / rep.successes;
  return rep;
}

inline BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  std::vector<TrialResult> trials;
  trials.reserve(static_cast<std::size_t>(spec.trials));
  for (int i = 0; i < spec.trials; ++i) trials.push_back(run_trial(spec, i));
  return summarize(std::move(trials), spec.seed);
}

// ---------------------------------------------------------------------------
// Exposure
// ---------------------------------------------------------------------------

struct ExposureSummary {
  std::optional<RegionStats> first;     ///< original image
  std::optional<RegionStats> adjusted;  ///< first tick metered inside the band
  std::optional<int> converged_tick;
  bool stayed_in_band{false};  ///< every metered tick after converged_tick is in band
  double final_gamma{0.0};
};

inline ExposureSummary summarize_exposure(const ExposureTrace& trace, const ExposureConfig& cfg) {
  ExposureSummary s;
  s.final_gamma = trace.final_gamma;
  auto in_band = [&](const RegionStats& st) { return st.mean >= cfg.mu_min && st.mean <= cfg.mu_max; };
  for (const auto& t : trace.ticks) {
    if (!t.stats) continue;
    if (!s.first) s.first = t.stats;
    if (!s.converged_tick && in_band(*t.stats)) {
      s.converged_tick = t.tick;
      s.adjusted = t.stats;
    }
  }
  if (s.converged_tick) {
    s.stayed_in_band = true;
    for (const auto& t : trace.ticks)
      if (t.tick > *s.converged_tick && t.stats && !in_band(*t.stats)) s.stayed_in_band = false;
  }
  return s;
}

}  // namespace bladescan
