#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace guided {

/// Conditional PMF pair of one stage's discrete feature: p0 = P(y | X=0),
/// p1 = P(y | X=1), over the alphabet {0, ..., Q-1}.
class FeatureModel {
 public:
  /// Throws ErrorKind::input unless both vectors have the same length
  /// Q >= 2, are nonnegative and each sums to 1 within 1e-9.
  FeatureModel(std::vector<double> p0, std::vector<double> p1);

  std::size_t alphabet_size() const noexcept { return p0_.size(); }
  std::span<const double> p0() const noexcept { return p0_; }
  std::span<const double> p1() const noexcept { return p1_; }
  double p0(std::size_t y) const { return p0_[y]; }
  double p1(std::size_t y) const { return p1_[y]; }

  /// True when the likelihood ratio is nondecreasing in the feature index.
  bool monotone_likelihood_ratio() const;

  friend bool operator==(const FeatureModel&, const FeatureModel&) = default;

 private:
  std::vector<double> p0_;
  std::vector<double> p1_;
};

/// Contamination levels (eps) and strengths (nu) of one stage's uncertainty
/// model. All zero means the nominal model is trusted as is.
struct UncertaintyParams {
  double eps0 = 0.0;
  double eps1 = 0.0;
  double nu0 = 0.0;
  double nu1 = 0.0;

  bool is_zero() const noexcept {
    return eps0 == 0.0 && eps1 == 0.0 && nu0 == 0.0 && nu1 == 0.0;
  }
  /// Throws ErrorKind::input when any parameter leaves [0, 1].
  void validate() const;

  friend bool operator==(const UncertaintyParams&, const UncertaintyParams&) = default;
};

/// Posterior probability of target presence.
class Belief {
 public:
  constexpr Belief() = default;
  /// Throws ErrorKind::input outside [0, 1].
  explicit Belief(double value);

  constexpr double value() const noexcept { return value_; }
  constexpr operator double() const noexcept { return value_; }

 private:
  double value_ = 0.0;
};

/// Uniform grid {0, 1/(M-1), ..., 1} on the belief simplex.
class BeliefGrid {
 public:
  static constexpr std::size_t default_size = 1001;

  /// Throws ErrorKind::input for M < 2.
  explicit BeliefGrid(std::size_t size = default_size);

  std::size_t size() const noexcept { return size_; }
  double step() const noexcept { return step_; }
  double point(std::size_t j) const noexcept {
    return static_cast<double>(j) / static_cast<double>(size_ - 1);
  }
  std::vector<double> points() const;

  friend bool operator==(const BeliefGrid& a, const BeliefGrid& b) noexcept {
    return a.size_ == b.size_;
  }

 private:
  std::size_t size_;
  double step_;
};

/// A function of the belief sampled on a BeliefGrid.
struct BeliefTable {
  BeliefGrid grid;
  std::vector<double> values;

  BeliefTable(BeliefGrid g, std::vector<double> v);
};

/// p1[y] / p0[y]; +inf when only p0[y] vanishes, 1 when both do.
double likelihood_ratio(const FeatureModel& model, std::size_t y);

/// One Bayes step of the belief after observing feature y.
Belief posterior_update(Belief prior, const FeatureModel& model, std::size_t y);

/// Same update for a known likelihood ratio (may be +inf).
double posterior_from_ratio(double prior, double ratio) noexcept;

/// Predictive probability of y under the current belief.
double evidence(Belief prior, const FeatureModel& model, std::size_t y);

/// Piecewise-linear interpolation of the table; exact at grid points.
double interpolate(const BeliefTable& table, double pi);
double interpolate(std::span<const double> values, const BeliefGrid& grid, double pi);

}  // namespace guided
