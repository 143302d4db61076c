#pragma once

#include "guided/model.hpp"

namespace guided {

/// Clip limits [lL, lU] applied to a stage's likelihood ratio.
struct RobustBand {
  double lower = 0.0;
  double upper = 0.0;
};

/// Admissible posterior range [pi_L, pi_U] at a stage.
struct BeliefInterval {
  double lo = 0.0;
  double hi = 1.0;

  bool contains(double pi) const noexcept { return pi >= lo && pi <= hi; }
};

/// Output of least_favorable: the transformed PMF pair, the band it was built
/// with, and the normalization residuals before the final rescale.
struct RobustModel {
  FeatureModel model;
  RobustBand band;
  double residual0 = 0.0;  // sum(q0) - 1 before rescaling
  double residual1 = 0.0;  // sum(q1) - 1 before rescaling
};

/// Smallest and largest likelihood ratio over symbols that carry mass.
RobustBand ratio_range(const FeatureModel& model);

/// Solves the two normalization equations of the least-favorable pair for the
/// clip limits. Nested bisection (outer on lU, inner on lL) in log-ratio space
/// with a dense scan over lU when the outer bracket fails.
///
/// A side whose contamination is absent (eps1 = nu1 = 0 for the lower clip,
/// eps0 = nu0 = 0 for the upper one) keeps the nominal extreme ratio: its
/// normalization equation holds identically.
RobustBand solve_band(const FeatureModel& model, const UncertaintyParams& u);

/// Huber-style least-favorable PMF pair for the contaminated neighbourhood
/// of `model`. With u all zero the model passes through unchanged.
RobustModel least_favorable(const FeatureModel& model, const UncertaintyParams& u);

/// Propagates a prior interval through one stage with ratios confined to
/// `band`: lo moves with band.lower, hi with band.upper.
BeliefInterval posterior_bounds(const BeliefInterval& prior, const RobustBand& band);

}  // namespace guided
