#include "guided/duty_cycle.hpp"

#include <algorithm>

#include "guided/errors.hpp"

namespace guided {

void DutyCycleSpec::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) fail(ErrorKind::input, "duty factor must lie in [0, 1]");
  if (!(off_cost >= 0.0) || !(off_cost <= on_cost)) {
    fail(ErrorKind::input, "duty-cycle costs need 0 <= off_cost <= on_cost");
  }
  if (!(miss_cost > 0.0) || !(fa_cost > 0.0)) {
    fail(ErrorKind::input, "miss and false-alarm costs must be positive");
  }
}

DutyCycleSpec ideal_duty_cycle(const SystemSpec& spec, double rho) {
  const auto& last = spec.stages.back();
  return {rho, last.on_cost, last.off_cost, last.model, spec.miss_cost, spec.fa_cost,
          spec.prior};
}

OnModeRisk on_mode_risk(const DutyCycleSpec& spec) {
  const double tau = spec.fa_cost / (spec.fa_cost + spec.miss_cost);
  const double pi0 = spec.prior.value();
  double missed = 0.0;  // P(declare 0 | X=1)
  double alarmed = 0.0;  // P(declare 1 | X=0)
  for (std::size_t y = 0; y < spec.detector.alphabet_size(); ++y) {
    if (posterior_update(spec.prior, spec.detector, y).value() >= tau) {
      alarmed += spec.detector.p0(y);
    } else {
      missed += spec.detector.p1(y);
    }
  }
  return {spec.miss_cost * pi0 * missed, spec.fa_cost * (1.0 - pi0) * alarmed};
}

RiskReport dc_risk(const DutyCycleSpec& spec, double lambda, const OnModeRisk& on) {
  spec.validate();
  const double rho = spec.rho;
  RiskReport r;
  r.final_miss = rho * on.miss + (1.0 - rho) * spec.miss_cost * spec.prior.value();
  r.final_fa = rho * on.fa;
  r.energy = rho * spec.on_cost + (1.0 - rho) * spec.off_cost;
  r.weighted_energy = lambda * r.energy;
  r.total = r.final_miss + r.final_fa + r.weighted_energy;
  return r;
}

RiskReport dc_risk(const DutyCycleSpec& spec, double lambda) {
  return dc_risk(spec, lambda, on_mode_risk(spec));
}

DutyFactor energy_equivalent_rho(double target, double on_cost, double off_cost) {
  if (!(on_cost > off_cost)) fail(ErrorKind::input, "duty-cycle on_cost must exceed off_cost");
  if (target <= off_cost) return {0.0, target < off_cost};
  if (target >= on_cost) return {1.0, target > on_cost};
  return {(target - off_cost) / (on_cost - off_cost), false};
}

DominanceVerdict dominance_check(const SystemSpec& spec, const Policy& policy,
                                 const RiskReport& report) {
  const auto& last = spec.stages.back();
  const double lambda = policy.lambda;
  DominanceVerdict v;
  v.beats_always_off =
      report.total <= spec.miss_cost * spec.prior.value() + lambda * last.off_cost;
  v.saving_covers_miss = report.inter_miss <= lambda * (last.on_cost - report.energy);
  return v;
}

}  // namespace guided
