#pragma once

#include "guided/cascade.hpp"
#include "guided/model.hpp"

namespace guided {

/// A detector that is switched fully on for a fraction rho of the frames and
/// is off (declaring negative) otherwise.
struct DutyCycleSpec {
  double rho = 1.0;
  double on_cost = 0.0;   // D_dc, mJ/frame
  double off_cost = 0.0;  // d_dc, mJ/frame
  FeatureModel detector;  // the cascade's last-stage model
  double miss_cost = 3.0;
  double fa_cost = 1.0;
  Belief prior{0.1};

  void validate() const;
};

/// Duty-cycler with the last stage's costs: the best any duty-cycler can do.
DutyCycleSpec ideal_duty_cycle(const SystemSpec& spec, double rho);

/// On-mode risks (C_M * P(miss, X=1), C_A * P(fa, X=0)) of the single-stage
/// Bayes detector with threshold C_A / (C_A + C_M).
struct OnModeRisk {
  double miss = 0.0;
  double fa = 0.0;
};
OnModeRisk on_mode_risk(const DutyCycleSpec& spec);

/// Analytic risk of the duty-cycler. final_miss includes the off-mode misses.
RiskReport dc_risk(const DutyCycleSpec& spec, double lambda);

/// Same as dc_risk, with on-mode risks supplied (e.g. measured by simulation).
RiskReport dc_risk(const DutyCycleSpec& spec, double lambda, const OnModeRisk& on_mode);

struct DutyFactor {
  double rho = 0.0;
  bool clamped = false;  // target was outside [d_dc, D_dc]
};

/// Duty factor whose expected energy equals `target`.
DutyFactor energy_equivalent_rho(double target, double on_cost, double off_cost);

/// Sufficient conditions for the cascade to beat the ideal duty-cycler at
/// every duty factor.
struct DominanceVerdict {
  bool beats_always_off = false;  // total <= C_M pi0 + lambda d_K
  bool saving_covers_miss = false;  // inter_miss <= lambda (D_K - energy)
  bool dominates() const noexcept { return beats_always_off && saving_covers_miss; }
};
DominanceVerdict dominance_check(const SystemSpec& spec, const Policy& policy,
                                 const RiskReport& report);

}  // namespace guided
