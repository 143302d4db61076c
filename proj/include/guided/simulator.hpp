#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "guided/adaptive.hpp"
#include "guided/cascade.hpp"
#include "guided/duty_cycle.hpp"
#include "guided/graph.hpp"

namespace guided {

enum class SimMode { belief, adaptive };

struct StreamConfig {
  std::uint64_t n_frames = 1'000'000;
  std::uint64_t seed = 1;
  SimMode mode = SimMode::belief;
  double mu = 1e-3;                 // adaptive step size
  std::uint64_t burn_in = 100'000;  // adaptive frames run before measuring
  unsigned threads = 0;             // 0: GUIDED_THREADS or hardware concurrency
};

/// Frame counts and per-frame averages of one stream. Rates are joint
/// frequencies per frame (e.g. a miss is a target frame declared negative),
/// so C_M * miss_rate estimates the miss-risk component directly.
struct SimReport {
  std::uint64_t n_frames = 0;
  std::uint64_t targets = 0;
  std::uint64_t misses = 0;
  std::uint64_t inter_misses = 0;  // misses declared by an intermediate stop
  std::uint64_t false_alarms = 0;

  double miss_rate = 0.0;
  double inter_miss_rate = 0.0;
  double final_miss_rate = 0.0;
  double fa_rate = 0.0;
  double energy = 0.0;  // mJ/frame
  double risk = 0.0;    // lambda * energy + C_M * miss + C_A * fa, per frame

  double se_miss = 0.0;
  double se_inter_miss = 0.0;
  double se_final_miss = 0.0;
  double se_fa = 0.0;
  double se_energy = 0.0;
  double se_risk = 0.0;

  // Adaptive mode only, one entry per stage.
  std::vector<double> final_eta;
  std::vector<double> activation_rate;  // measured over the measurement frames
  std::vector<double> mean_target;      // average q_k at the visits measured
  std::vector<double> tracking_error;   // |activation_rate - mean_target|

  /// Empirical counterpart of a RiskReport.
  RiskReport as_risk(double miss_cost, double fa_cost, double lambda) const;
};

/// Worker count used when StreamConfig::threads is 0.
unsigned default_threads();

/// Guided-processing cascade under `policy`. Belief mode is chunked across
/// workers; adaptive mode is a single sequential stream (its thresholds carry
/// state from frame to frame). Throws ErrorKind::mismatch when the policy and
/// system disagree in size.
SimReport simulate(const StreamConfig& config, const SystemSpec& spec, const Policy& policy);

/// Duty-cycler: on with probability rho per frame, off frames declare negative.
SimReport simulate_duty_cycle(const StreamConfig& config, const DutyCycleSpec& spec,
                              double lambda);

/// Graph policy; the root is always on.
SimReport simulate_graph(const StreamConfig& config, const DetectionGraph& graph,
                         const GraphPolicy& policy);

}  // namespace guided
