#include "guided/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "guided/errors.hpp"

namespace guided {

namespace {

constexpr double normalization_tolerance = 1e-8;
constexpr int bisection_steps = 200;
constexpr int scan_points = 4000;

// Mixing coefficients v', w', v'', w'' of the least-favorable pair.
struct Mixing {
  double v1, w1;  // lower-clip region
  double v2, w2;  // upper-clip region
};

Mixing mixing(const UncertaintyParams& u) {
  return {(u.eps1 + u.nu1) / (1.0 - u.eps1), u.nu0 / (1.0 - u.eps0),
          (u.eps0 + u.nu0) / (1.0 - u.eps0), u.nu1 / (1.0 - u.eps1)};
}

// Evaluates the transformed PMF pair for a candidate band. Symbols are
// assigned to regions through their nominal ratio only, so tied ratios move
// between regions as a block.
class Transform {
 public:
  Transform(const FeatureModel& model, const UncertaintyParams& u)
      : model_(model), u_(u), mix_(mixing(u)) {
    ratios_.reserve(model.alphabet_size());
    for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
      ratios_.push_back(likelihood_ratio(model, y));
    }
  }

  void apply(double lower, double upper, std::vector<double>& q0,
             std::vector<double>& q1) const {
    const std::size_t n = ratios_.size();
    q0.assign(n, 0.0);
    q1.assign(n, 0.0);
    for (std::size_t y = 0; y < n; ++y) {
      const double p0 = model_.p0(y);
      const double p1 = model_.p1(y);
      const double l = ratios_[y];
      if (l < lower) {
        const double mass = mix_.v1 * p0 + mix_.w1 * p1;
        const double den = mix_.v1 + mix_.w1 * lower;
        q0[y] = (1.0 - u_.eps0) * mass / den;
        q1[y] = (1.0 - u_.eps1) * lower * mass / den;
      } else if (l > upper) {
        const double mass = mix_.w2 * p0 + mix_.v2 * p1;
        const double den = mix_.w2 + mix_.v2 * upper;
        q0[y] = (1.0 - u_.eps0) * mass / den;
        q1[y] = (1.0 - u_.eps1) * upper * mass / den;
      } else {
        q0[y] = (1.0 - u_.eps0) * p0;
        q1[y] = (1.0 - u_.eps1) * p1;
      }
    }
  }

  // (sum q0 - 1, sum q1 - 1)
  std::pair<double, double> residuals(double lower, double upper) const {
    apply(lower, upper, scratch0_, scratch1_);
    double s0 = 0.0;
    double s1 = 0.0;
    for (std::size_t y = 0; y < scratch0_.size(); ++y) {
      s0 += scratch0_[y];
      s1 += scratch1_[y];
    }
    return {s0 - 1.0, s1 - 1.0};
  }

 private:
  const FeatureModel& model_;
  UncertaintyParams u_;
  Mixing mix_;
  std::vector<double> ratios_;
  mutable std::vector<double> scratch0_;
  mutable std::vector<double> scratch1_;
};

// Bisection for an increasing function f on [lo, hi] in log space. Returns
// the endpoint when f does not change sign.
template <typename F>
double bisect_increasing(F&& f, double lo, double hi) {
  if (f(hi) <= 0.0) return hi;
  if (f(lo) >= 0.0) return lo;
  double a = std::log(lo);
  double b = std::log(hi);
  for (int k = 0; k < bisection_steps && b - a > 0.0; ++k) {
    const double mid = 0.5 * (a + b);
    if (mid == a || mid == b) break;
    if (f(std::exp(mid)) < 0.0) a = mid; else b = mid;
  }
  return std::exp(0.5 * (a + b));
}

// Finite search limits for the clip values. Zero or infinite nominal ratios
// are replaced by a value well past the finite ones.
std::pair<double, double> search_limits(const RobustBand& range,
                                        const FeatureModel& model) {
  double smallest_positive = 1.0;
  double largest_finite = 1.0;
  for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
    if (model.p0(y) == 0.0 && model.p1(y) == 0.0) continue;
    const double l = likelihood_ratio(model, y);
    if (l > 0.0) smallest_positive = std::min(smallest_positive, l);
    if (std::isfinite(l)) largest_finite = std::max(largest_finite, l);
  }
  const double lo = range.lower > 0.0 ? range.lower : smallest_positive * 1e-12;
  const double hi = std::isfinite(range.upper) ? range.upper : largest_finite * 1e12;
  return {std::min(lo, 1.0), std::max(hi, 1.0)};
}

}  // namespace

RobustBand ratio_range(const FeatureModel& model) {
  RobustBand out{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
    if (model.p0(y) == 0.0 && model.p1(y) == 0.0) continue;
    const double l = likelihood_ratio(model, y);
    out.lower = std::min(out.lower, l);
    out.upper = std::max(out.upper, l);
  }
  return out;
}

RobustBand solve_band(const FeatureModel& model, const UncertaintyParams& u) {
  u.validate();
  const RobustBand nominal = ratio_range(model);
  if (u.is_zero()) return nominal;
  if (u.eps0 >= 1.0 || u.eps1 >= 1.0) {
    fail(ErrorKind::degenerate, "contamination level of 1 leaves no nominal mass");
  }

  const Transform transform(model, u);
  const auto [lo_limit, hi_limit] = search_limits(nominal, model);
  const bool lower_active = u.eps1 + u.nu1 > 0.0;
  const bool upper_active = u.eps0 + u.nu0 > 0.0;

  // lL solving sum(q1) = 1 for a fixed lU; sum(q1) increases with lL.
  auto lower_for = [&](double upper) {
    if (!lower_active) return nominal.lower;
    return bisect_increasing(
        [&](double lower) { return transform.residuals(lower, upper).second; },
        lo_limit, 1.0);
  };

  RobustBand band;
  if (!upper_active) {
    band = {lower_for(nominal.upper), nominal.upper};
  } else {
    // sum(q0) - 1 along the curve where q1 is normalized.
    auto outer = [&](double upper) {
      return transform.residuals(lower_for(upper), upper).first;
    };
    auto solve_between = [&](double a, double b) {
      // outer(a) > 0 >= outer(b), a < b
      double x = std::log(a);
      double z = std::log(b);
      for (int k = 0; k < bisection_steps; ++k) {
        const double mid = 0.5 * (x + z);
        if (mid == x || mid == z) break;
        if (outer(std::exp(mid)) > 0.0) x = mid; else z = mid;
      }
      return std::exp(0.5 * (x + z));
    };

    if (lower_active) {
      const auto [r0, r1] = transform.residuals(1.0, 1.0);
      if (r0 < -normalization_tolerance && r1 < -normalization_tolerance) {
        fail(ErrorKind::infeasible_band,
             "contamination neighbourhoods overlap: even a unit band leaves mass missing");
      }
    }
    std::optional<double> upper;
    const double at_one = outer(1.0);
    const double at_max = outer(hi_limit);
    if (at_one == 0.0) {
      upper = 1.0;
    } else if (at_one > 0.0 && at_max <= 0.0) {
      upper = solve_between(1.0, hi_limit);
    } else {
      // Residual not monotone along the curve: scan for the first sign change.
      double prev_x = 1.0;
      double prev_f = at_one;
      const double span = std::log(hi_limit);
      for (int k = 1; k <= scan_points && !upper; ++k) {
        const double x = std::exp(span * k / scan_points);
        const double f = outer(x);
        if (f == 0.0) upper = x;
        else if ((prev_f > 0.0) != (f > 0.0)) {
          upper = prev_f > 0.0 ? solve_between(prev_x, x) : solve_between(x, prev_x);
        }
        prev_x = x;
        prev_f = f;
      }
    }
    if (!upper) {
      fail(ErrorKind::infeasible_band,
           "no likelihood-ratio band normalizes the least-favorable pair");
    }
    band = {lower_for(*upper), *upper};
  }

  const auto [r0, r1] = transform.residuals(band.lower, band.upper);
  if (std::abs(r0) > normalization_tolerance || std::abs(r1) > normalization_tolerance) {
    fail(ErrorKind::infeasible_band,
         "least-favorable pair cannot be normalized (residuals " + std::to_string(r0) +
             ", " + std::to_string(r1) + ")");
  }
  return band;
}

RobustModel least_favorable(const FeatureModel& model, const UncertaintyParams& u) {
  u.validate();
  if (u.is_zero()) return {model, ratio_range(model), 0.0, 0.0};

  const RobustBand band = solve_band(model, u);
  const Transform transform(model, u);
  std::vector<double> q0;
  std::vector<double> q1;
  transform.apply(band.lower, band.upper, q0, q1);

  double s0 = 0.0;
  double s1 = 0.0;
  for (std::size_t y = 0; y < q0.size(); ++y) {
    s0 += q0[y];
    s1 += q1[y];
  }
  for (auto& v : q0) v /= s0;
  for (auto& v : q1) v /= s1;
  return {FeatureModel(std::move(q0), std::move(q1)), band, s0 - 1.0, s1 - 1.0};
}

BeliefInterval posterior_bounds(const BeliefInterval& prior, const RobustBand& band) {
  return {posterior_from_ratio(prior.lo, band.lower),
          posterior_from_ratio(prior.hi, band.upper)};
}

}  // namespace guided
