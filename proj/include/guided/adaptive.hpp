#pragma once

#include <cstddef>
#include <vector>

#include "guided/cascade.hpp"
#include "guided/model.hpp"

namespace guided {

/// q_k(b): probability that stage k activates (continues, or declares
/// positive at the last stage) given incoming belief b, tabulated on the grid.
struct ActivationTargets {
  std::vector<BeliefTable> tables;

  double at(std::size_t k, double incoming) const { return interpolate(tables[k], incoming); }
};

ActivationTargets compute_activation_targets(const SystemSpec& spec, const Policy& policy,
                                             const BeliefGrid& grid);

enum class Decision { stop, proceed, negative, positive };

/// Feature-domain thresholds eta_k (activate when y >= eta_k) driven toward
/// the activation targets, with EWMA estimates of the realized rates.
struct AdaptiveState {
  std::vector<double> eta;
  std::vector<double> rate;     // q-hat per stage
  std::vector<bool> enabled;    // stage model has a monotone likelihood ratio
  std::vector<std::size_t> alphabet;
  double mu = 1e-3;
};

/// Fresh state: eta at the middle of each alphabet, rate estimates seeded at
/// the targets for the prior. Stages without a monotone ratio are disabled.
AdaptiveState make_adaptive_state(const SystemSpec& spec, const ActivationTargets& targets,
                                  double mu);

/// eta_k += mu (q-hat - q), clamped to [0, Q_k].
void adaptive_step(AdaptiveState& state, std::size_t k, double observed_rate, double target);

/// Folds one activation outcome into q-hat_k.
void observe_activation(AdaptiveState& state, std::size_t k, bool activated);

/// Threshold rule on the raw feature index. Throws ErrorKind::input for a
/// disabled stage; callers fall back to the belief rule there.
Decision adaptive_decide(const AdaptiveState& state, std::size_t k, std::size_t y,
                         std::size_t stages);

}  // namespace guided
