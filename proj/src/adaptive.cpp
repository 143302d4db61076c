#include "guided/adaptive.hpp"

#include <algorithm>
#include <string>

#include "guided/errors.hpp"

namespace guided {

ActivationTargets compute_activation_targets(const SystemSpec& spec, const Policy& policy,
                                             const BeliefGrid& grid) {
  if (policy.size() != spec.size()) fail(ErrorKind::mismatch, "policy/system stage mismatch");
  ActivationTargets out;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& model = spec.stages[k].model;
    std::vector<double> q(grid.size(), 0.0);
    for (std::size_t j = 0; j < grid.size(); ++j) {
      const Belief b(grid.point(j));
      double sum = 0.0;
      for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
        if (policy.activates(k, posterior_update(b, model, y).value())) {
          sum += evidence(b, model, y);
        }
      }
      q[j] = std::clamp(sum, 0.0, 1.0);
    }
    out.tables.emplace_back(grid, std::move(q));
  }
  return out;
}

AdaptiveState make_adaptive_state(const SystemSpec& spec, const ActivationTargets& targets,
                                  double mu) {
  if (!(mu > 0.0)) fail(ErrorKind::input, "adaptation step size must be positive");
  AdaptiveState s;
  s.mu = mu;
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& model = spec.stages[k].model;
    s.alphabet.push_back(model.alphabet_size());
    s.eta.push_back(0.5 * static_cast<double>(model.alphabet_size()));
    s.rate.push_back(targets.at(k, spec.prior.value()));
    s.enabled.push_back(model.monotone_likelihood_ratio());
  }
  return s;
}

void adaptive_step(AdaptiveState& state, std::size_t k, double observed_rate, double target) {
  double& eta = state.eta[k];
  eta += state.mu * (observed_rate - target);
  eta = std::clamp(eta, 0.0, static_cast<double>(state.alphabet[k]));
}

void observe_activation(AdaptiveState& state, std::size_t k, bool activated) {
  state.rate[k] += state.mu * ((activated ? 1.0 : 0.0) - state.rate[k]);
}

Decision adaptive_decide(const AdaptiveState& state, std::size_t k, std::size_t y,
                         std::size_t stages) {
  if (!state.enabled[k]) {
    fail(ErrorKind::input, "stage " + std::to_string(k + 1) +
                               " has a non-monotone likelihood ratio; adaptive mode refused");
  }
  const bool active = static_cast<double>(y) >= state.eta[k];
  if (k + 1 == stages) return active ? Decision::positive : Decision::negative;
  return active ? Decision::proceed : Decision::stop;
}

}  // namespace guided
