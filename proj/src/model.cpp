#include "guided/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "guided/errors.hpp"

namespace guided {

namespace {

constexpr double pmf_tolerance = 1e-9;

void check_pmf(std::span<const double> p, const char* name) {
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorKind::input, std::string(name) + " has a negative or non-finite entry");
    }
  }
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (std::abs(total - 1.0) > pmf_tolerance) {
    fail(ErrorKind::input,
         std::string(name) + " sums to " + std::to_string(total) + ", expected 1");
  }
}

}  // namespace

FeatureModel::FeatureModel(std::vector<double> p0, std::vector<double> p1)
    : p0_(std::move(p0)), p1_(std::move(p1)) {
  if (p0_.size() != p1_.size()) {
    fail(ErrorKind::input, "p0 and p1 have different alphabet sizes");
  }
  if (p0_.size() < 2) {
    fail(ErrorKind::input, "feature alphabet needs at least two symbols");
  }
  check_pmf(p0_, "p0");
  check_pmf(p1_, "p1");
}

bool FeatureModel::monotone_likelihood_ratio() const {
  double previous = -1.0;
  for (std::size_t y = 0; y < alphabet_size(); ++y) {
    if (p0_[y] == 0.0 && p1_[y] == 0.0) continue;  // carries no information
    const double l = likelihood_ratio(*this, y);
    if (l < previous) return false;
    previous = l;
  }
  return true;
}

void UncertaintyParams::validate() const {
  for (double v : {eps0, eps1, nu0, nu1}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      fail(ErrorKind::input, "uncertainty parameters must lie in [0, 1]");
    }
  }
}

Belief::Belief(double value) : value_(value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    fail(ErrorKind::input, "belief " + std::to_string(value) + " outside [0, 1]");
  }
}

BeliefGrid::BeliefGrid(std::size_t size) : size_(size), step_(0.0) {
  if (size < 2) fail(ErrorKind::input, "belief grid needs at least two points");
  step_ = 1.0 / static_cast<double>(size - 1);
}

std::vector<double> BeliefGrid::points() const {
  std::vector<double> out(size_);
  for (std::size_t j = 0; j < size_; ++j) out[j] = point(j);
  return out;
}

BeliefTable::BeliefTable(BeliefGrid g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
  if (values.size() != grid.size()) {
    fail(ErrorKind::input, "belief table length does not match its grid");
  }
}

double likelihood_ratio(const FeatureModel& model, std::size_t y) {
  if (y >= model.alphabet_size()) {
    fail(ErrorKind::input, "feature index " + std::to_string(y) + " out of range");
  }
  const double a = model.p1(y);
  const double b = model.p0(y);
  if (b == 0.0) return a == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return a / b;
}

double posterior_from_ratio(double prior, double ratio) noexcept {
  if (prior <= 0.0) return 0.0;
  if (prior >= 1.0 || std::isinf(ratio)) return 1.0;
  if (ratio <= 0.0) return 0.0;
  return 1.0 / (1.0 + (1.0 - prior) / (ratio * prior));
}

Belief posterior_update(Belief prior, const FeatureModel& model, std::size_t y) {
  if (y >= model.alphabet_size()) {
    fail(ErrorKind::input, "feature index " + std::to_string(y) + " out of range");
  }
  const double pi = prior.value();
  const double num = pi * model.p1(y);
  const double den = num + (1.0 - pi) * model.p0(y);
  if (den == 0.0) return prior;  // 0/0 ratio: the symbol carries no information
  return Belief(std::clamp(num / den, 0.0, 1.0));
}

double evidence(Belief prior, const FeatureModel& model, std::size_t y) {
  if (y >= model.alphabet_size()) {
    fail(ErrorKind::input, "feature index " + std::to_string(y) + " out of range");
  }
  const double pi = prior.value();
  return model.p1(y) * pi + model.p0(y) * (1.0 - pi);
}

double interpolate(std::span<const double> values, const BeliefGrid& grid, double pi) {
  const std::size_t last = grid.size() - 1;
  const double t = std::clamp(pi, 0.0, 1.0) * static_cast<double>(last);
  const double nearest = std::round(t);
  // Grid points computed as j/(M-1) land within a few ulps of an integer here.
  if (std::abs(t - nearest) <= 1e-9) return values[static_cast<std::size_t>(nearest)];
  const auto j = std::min(static_cast<std::size_t>(t), last - 1);
  const double w = t - static_cast<double>(j);
  return (1.0 - w) * values[j] + w * values[j + 1];
}

double interpolate(const BeliefTable& table, double pi) {
  return interpolate(table.values, table.grid, pi);
}

}  // namespace guided
