#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guided/model.hpp"
#include "guided/robust.hpp"

namespace guided {

/// One stage of a cascade. Costs are energies per frame in millijoules.
struct StageSpec {
  std::string name;
  FeatureModel model;      // already robustified for intermediate stages
  double on_cost = 0.0;    // D_i, paid when the stage extracts its feature
  double off_cost = 0.0;   // d_i, paid when the stage idles
  BeliefInterval bounds;   // admissible posterior range after this stage
};

struct SystemSpec {
  std::vector<StageSpec> stages;
  double miss_cost = 3.0;
  double fa_cost = 1.0;
  Belief prior{0.1};
  std::optional<double> lambda;
  std::optional<double> budget;  // mJ/frame; drives calibrate_lambda

  std::size_t size() const noexcept { return stages.size(); }
  /// K >= 2, positive decision costs, off < on for stages 2..K, and a
  /// nonnegative lambda when present.
  void validate() const;
  double final_threshold() const noexcept { return fa_cost / (fa_cost + miss_cost); }
};

/// Recomputes every stage's admissible posterior interval from the prior,
/// pushing [pi0, pi0] through the ratio range of each intermediate stage.
/// The last stage keeps [0, 1].
void assign_bounds(SystemSpec& spec);

/// Copy of `spec` with a different prior (bounds recomputed).
SystemSpec with_prior(SystemSpec spec, double prior);

/// Backward accumulated off-costs: entry k holds the idle energy of stages
/// k..K-1 (0-based); entry K is 0.
std::vector<double> accumulated_off_costs(const SystemSpec& spec);

/// Optimal cascade policy on a belief grid.
struct Policy {
  BeliefGrid grid{};
  double lambda = 0.0;
  double prior = 0.0;
  double miss_cost = 0.0;
  double fa_cost = 0.0;
  /// tau*_i clamped into the admissible interval; tau*_K = C_A / (C_A + C_M).
  std::vector<double> thresholds;
  /// Threshold the decisions actually use: the smallest grid belief where
  /// continuing is no worse than stopping, before clamping. A value above 1
  /// means the stage never continues. Last entry equals thresholds.back().
  std::vector<double> switch_points;
  std::vector<BeliefInterval> bounds;
  std::vector<BeliefTable> values;  // V_1 .. V_K
  double root_value = 0.0;          // V_0(pi0)
  std::vector<int> stage_visits;    // backward-pass visits per stage

  std::size_t size() const noexcept { return thresholds.size(); }
  /// Stage k (0-based) continues / declares positive at posterior pi.
  bool activates(std::size_t k, double pi) const noexcept { return pi >= switch_points[k]; }
};

/// Risk decomposition of a policy. total = weighted_energy + inter_miss +
/// final_miss + final_fa.
struct RiskReport {
  double total = 0.0;
  double inter_miss = 0.0;
  double final_miss = 0.0;
  double final_fa = 0.0;
  double energy = 0.0;           // mJ/frame
  double weighted_energy = 0.0;  // lambda * energy

  double miss_probability(double miss_cost) const { return (inter_miss + final_miss) / miss_cost; }
  double fa_probability(double fa_cost) const { return final_fa / fa_cost; }
};

/// E_y[ V(posterior(b, y)) ] with V interpolated on the grid.
double expected_value(const FeatureModel& model, std::span<const double> values,
                      const BeliefGrid& grid, double belief);

/// Single backward pass over the stages. Needs spec.lambda.
Policy solve(const SystemSpec& spec, const BeliefGrid& grid = BeliefGrid());

/// Risk components of `policy` from backward recursions on the grid under
/// the fixed decisions; total is the policy's V_0.
RiskReport evaluate(const SystemSpec& spec, const Policy& policy);

/// Risk components of `policy` computed on the exact posterior atoms reached
/// from the prior (no grid interpolation); total is the sum of components.
/// This is the quantity a stream simulation converges to.
RiskReport evaluate_exact(const SystemSpec& spec, const Policy& policy);

struct Calibration {
  double lambda = 0.0;
  Policy policy;
  RiskReport report;  // exact evaluation at lambda
};

/// Smallest energy price whose policy meets the budget (exact energy).
/// Budgets above the always-run energy give lambda = 0; budgets below the
/// stop-everything energy throw ErrorKind::infeasible_budget.
Calibration calibrate_lambda(const SystemSpec& spec, double budget,
                             const BeliefGrid& grid = BeliefGrid());

/// Energy range reachable by threshold policies: (stop after stage 1, run all).
std::pair<double, double> achievable_energy(const SystemSpec& spec);

/// Per intermediate stage: true when the best early-positive threshold lies
/// above the stage's admissible posterior range, i.e. adding early positive
/// decisions cannot improve the cascade.
std::vector<bool> check_cascade_optimality(const SystemSpec& spec, const Policy& policy);

/// Largest grid belief where the cascade's value V_k is still below the risk
/// of declaring positive early (C_A (1 - b) plus the idle energy), or -1 when
/// there is none. Early positives can only pay off above it.
double early_positive_threshold(const SystemSpec& spec, const Policy& policy, std::size_t k);

/// Copy of `spec` with stage k removed; its on/off costs fold into the next
/// stage (the data still has to reach it).
SystemSpec drop_stage(const SystemSpec& spec, std::size_t k);

/// Weighted posterior atoms after each stage for frames that reach it under
/// `policy`: level k holds (posterior after stage k, probability).
struct BeliefAtom {
  double belief;
  double weight;
};
std::vector<std::vector<BeliefAtom>> reachable_atoms(const SystemSpec& spec, const Policy& policy);

}  // namespace guided
