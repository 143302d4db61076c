#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "guided/cascade.hpp"
#include "guided/errors.hpp"
#include "guided/graph.hpp"
#include "guided/simulator.hpp"

namespace guided {

inline constexpr const char* tool_version = "guided 1.0.0";
inline constexpr const char* model_format = "guided-model/1";
inline constexpr const char* policy_format = "guided-policy/1";

struct StageEntry {
  std::string name;
  std::vector<double> p0;
  std::vector<double> p1;
  double on_cost = 0.0;
  double off_cost = 0.0;
  UncertaintyParams uncertainty;
  // Filled in by robustify.
  std::optional<RobustBand> band;
  double residual0 = 0.0;
  double residual1 = 0.0;
};

/// On-disk description of a cascade or detection graph.
struct ModelFile {
  double miss_cost = 3.0;
  double fa_cost = 1.0;
  std::optional<double> prior;
  std::vector<double> prior_sweep;
  std::optional<double> lambda;
  std::optional<double> budget;
  std::size_t grid = BeliefGrid::default_size;
  std::vector<StageEntry> stages;
  std::vector<std::pair<int, int>> edges;  // non-empty: the stages are graph nodes
  bool robustified = false;                // intermediate PMFs already least-favorable
  // Costs of the full detector when duty-cycled; defaults derive from stages.
  std::optional<double> dc_on_cost;
  std::optional<double> dc_off_cost;

  bool is_graph() const noexcept { return !edges.empty(); }
  double default_prior() const;
  double duty_on_cost() const;
  double duty_off_cost() const;
};

/// Schema validation with ErrorKind::schema errors that name the offending
/// stage. PMFs off by more than 1e-9 (up to 1e-6) are rescaled and reported
/// in `warnings`.
ModelFile parse_model(const nlohmann::json& doc, std::vector<std::string>* warnings = nullptr);
ModelFile load_model(const std::string& path, std::vector<std::string>* warnings = nullptr);
nlohmann::json to_json(const ModelFile& file);
void save_json(const std::string& path, const nlohmann::json& doc);

/// FNV-1a over the canonical serialization, as 16 hex digits.
std::string config_hash(const ModelFile& file);

/// Stage models least-favorable-transformed where uncertainty is declared.
/// Uncertainty on terminal stages is ignored with a warning.
ModelFile robustify(const ModelFile& file, std::vector<std::string>* warnings = nullptr);

SystemSpec build_system(const ModelFile& file, double prior,
                        std::vector<std::string>* warnings = nullptr);
DetectionGraph build_graph(const ModelFile& file, double prior,
                           std::vector<std::string>* warnings = nullptr);

/// Exit status for a failure kind: 3 schema/input, 4 infeasible, 5 numerical, 1 other.
int exit_code(ErrorKind kind) noexcept;

// ---- commands ------------------------------------------------------------

struct OptimizeOptions {
  std::optional<double> lambda;
  std::optional<double> budget;
  std::optional<std::size_t> grid;
  std::optional<double> prior;
};

nlohmann::json cmd_robustify(const ModelFile& in, ModelFile& out,
                             std::vector<std::string>* warnings = nullptr);

nlohmann::json cmd_optimize(const ModelFile& file, const OptimizeOptions& opts,
                            std::vector<std::string>* warnings = nullptr);

/// Verdicts of the early-positive check per intermediate stage.
nlohmann::json cmd_check_optimality(const ModelFile& file, const OptimizeOptions& opts,
                                    std::vector<std::string>* warnings = nullptr);

struct SimulateOptions {
  StreamConfig stream;
  OptimizeOptions optimize;
};

/// Simulates the policy in `policy` (an optimize result) or, when null, the
/// freshly optimized one.
nlohmann::json cmd_simulate(const ModelFile& file, const nlohmann::json* policy,
                            const SimulateOptions& opts,
                            std::vector<std::string>* warnings = nullptr);

struct CompareOptions {
  double pi0_lo = 0.05;
  double pi0_hi = 0.15;
  std::size_t points = 11;
  std::uint64_t n_frames = 1'000'000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  OptimizeOptions optimize;
};

struct CompareRow {
  double pi0 = 0.0;
  double lambda = 0.0;
  double gp_risk = 0.0;
  double dc_ideal_risk = 0.0;
  double dc_real_risk = 0.0;
  double gp_energy = 0.0;
  double dc_energy = 0.0;
  double gp_fa = 0.0;
  double dc_fa = 0.0;
  double gp_miss = 0.0;
  double dc_miss = 0.0;
  bool dominance_total = false;   // cascade beats the always-off design
  bool dominance_saving = false;  // energy saving pays for the early misses
  double dc_rho = 0.0;
  double dc_ideal_rho = 0.0;
  double truncated_risk = 0.0;  // middle stage removed
  SimReport gp_sim;
  SimReport dc_real_sim;
};

struct CompareTable {
  std::string config_hash;
  std::vector<CompareRow> rows;
};

/// One row per prior in the sweep: cascade (analytic and simulated), ideal
/// and energy-equivalent real duty-cycling, and the truncated cascade.
CompareTable cmd_compare(const ModelFile& file, const CompareOptions& opts,
                         std::vector<std::string>* warnings = nullptr);
std::string compare_csv(const CompareTable& table);

/// Evenly spaced sweep lo, ..., hi with n points (lo alone when n = 1).
std::vector<double> sweep_points(double lo, double hi, std::size_t n);

// ---- fixtures ------------------------------------------------------------

struct FixtureOptions {
  std::size_t alphabet = 100;
  std::vector<double> separation{2.0, 2.5, 3.5};  // mean shift per stage, in std units
  double uncertainty = 0.1;
  double lambda = 1e-3;
  double prior = 0.1;
};

/// Synthetic three-stage "warbler-like" model: discretized unit Gaussians
/// with growing separation and the per-frame costs of the reference
/// prototype (mJ/frame).
ModelFile make_fixture(const FixtureOptions& opts = {});

/// Discretized N(mean, 1) over `bins` equal cells of [lo, hi]; the end cells
/// absorb the tails.
std::vector<double> discretized_gaussian(double mean, double lo, double hi, std::size_t bins);

}  // namespace guided
