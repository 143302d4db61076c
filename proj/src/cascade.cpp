#include "guided/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "guided/errors.hpp"

namespace guided {

namespace {

// Continue when its value is within this of stopping (ties continue).
double tie_tolerance(const SystemSpec& spec) {
  return 1e-12 * (spec.miss_cost + spec.fa_cost);
}

constexpr double never = 2.0;  // switch point meaning "never continue"

void check_policy(const SystemSpec& spec, const Policy& policy) {
  if (policy.size() != spec.size() || policy.values.size() != spec.size()) {
    fail(ErrorKind::mismatch, "policy has " + std::to_string(policy.size()) +
                                  " stages, system has " + std::to_string(spec.size()));
  }
  if (policy.miss_cost != spec.miss_cost || policy.fa_cost != spec.fa_cost) {
    fail(ErrorKind::mismatch, "policy was solved for different decision costs");
  }
}

// Posterior and evidence of symbol y at belief b, without validation.
struct Step {
  double evidence;
  double posterior;
};

inline Step step(const FeatureModel& m, double b, std::size_t y) {
  const double num = b * m.p1(y);
  const double den = num + (1.0 - b) * m.p0(y);
  return {den, den > 0.0 ? std::min(num / den, 1.0) : b};
}

}  // namespace

void SystemSpec::validate() const {
  if (stages.size() < 2) fail(ErrorKind::input, "a cascade needs at least two stages");
  if (!(miss_cost > 0.0) || !(fa_cost > 0.0)) {
    fail(ErrorKind::input, "miss and false-alarm costs must be positive");
  }
  for (std::size_t k = 0; k < stages.size(); ++k) {
    const auto& s = stages[k];
    if (!(s.on_cost >= 0.0) || !(s.off_cost >= 0.0)) {
      fail(ErrorKind::input, "stage " + std::to_string(k + 1) + " has a negative cost");
    }
    if (k > 0 && !(s.off_cost < s.on_cost)) {
      fail(ErrorKind::input,
           "stage " + std::to_string(k + 1) + " needs off_cost < on_cost");
    }
  }
  if (lambda && !(*lambda >= 0.0)) fail(ErrorKind::input, "lambda must be nonnegative");
}

void assign_bounds(SystemSpec& spec) {
  BeliefInterval interval{spec.prior.value(), spec.prior.value()};
  for (std::size_t k = 0; k < spec.stages.size(); ++k) {
    if (k + 1 == spec.stages.size()) {
      spec.stages[k].bounds = {0.0, 1.0};
    } else {
      interval = posterior_bounds(interval, ratio_range(spec.stages[k].model));
      spec.stages[k].bounds = interval;
    }
  }
}

SystemSpec with_prior(SystemSpec spec, double prior) {
  spec.prior = Belief(prior);
  assign_bounds(spec);
  return spec;
}

std::vector<double> accumulated_off_costs(const SystemSpec& spec) {
  std::vector<double> acc(spec.size() + 1, 0.0);
  for (std::size_t k = spec.size(); k-- > 0;) acc[k] = acc[k + 1] + spec.stages[k].off_cost;
  return acc;
}

double expected_value(const FeatureModel& model, std::span<const double> values,
                      const BeliefGrid& grid, double belief) {
  double sum = 0.0;
  for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
    const Step s = step(model, belief, y);
    if (s.evidence == 0.0) continue;
    sum += s.evidence * interpolate(values, grid, s.posterior);
  }
  return sum;
}

Policy solve(const SystemSpec& spec, const BeliefGrid& grid) {
  spec.validate();
  if (!spec.lambda) fail(ErrorKind::input, "solve needs a fixed lambda");
  const double lambda = *spec.lambda;
  const std::size_t n = spec.size();
  const std::size_t m = grid.size();
  const auto acc = accumulated_off_costs(spec);
  const double tol = tie_tolerance(spec);

  Policy policy;
  policy.grid = grid;
  policy.lambda = lambda;
  policy.prior = spec.prior.value();
  policy.miss_cost = spec.miss_cost;
  policy.fa_cost = spec.fa_cost;
  policy.thresholds.assign(n, 0.0);
  policy.switch_points.assign(n, 0.0);
  policy.stage_visits.assign(n, 0);
  policy.values.assign(n, BeliefTable(grid, std::vector<double>(m, 0.0)));
  for (const auto& s : spec.stages) policy.bounds.push_back(s.bounds);

  auto& last = policy.values[n - 1].values;
  for (std::size_t j = 0; j < m; ++j) {
    const double b = grid.point(j);
    last[j] = std::min(spec.miss_cost * b, spec.fa_cost * (1.0 - b));
  }
  policy.thresholds[n - 1] = spec.final_threshold();
  policy.switch_points[n - 1] = spec.final_threshold();
  ++policy.stage_visits[n - 1];

  for (std::size_t k = n - 1; k-- > 0;) {
    ++policy.stage_visits[k];
    const auto& next = spec.stages[k + 1];
    const auto& next_values = policy.values[k + 1].values;
    auto& values = policy.values[k].values;
    std::size_t first_continue = m;
    for (std::size_t j = 0; j < m; ++j) {
      const double b = grid.point(j);
      const double stop = spec.miss_cost * b + lambda * acc[k + 1];
      const double cont = lambda * next.on_cost + expected_value(next.model, next_values, grid, b);
      values[j] = std::min(stop, cont);
      if (first_continue == m && cont <= stop + tol) first_continue = j;
    }
    const double raw = first_continue == m ? never : grid.point(first_continue);
    policy.switch_points[k] = raw;
    policy.thresholds[k] =
        std::clamp(std::min(raw, 1.0), spec.stages[k].bounds.lo, spec.stages[k].bounds.hi);
  }

  policy.root_value = lambda * spec.stages[0].on_cost +
                      expected_value(spec.stages[0].model, policy.values[0].values, grid,
                                     spec.prior.value());
  return policy;
}

RiskReport evaluate(const SystemSpec& spec, const Policy& policy) {
  check_policy(spec, policy);
  const std::size_t n = spec.size();
  const BeliefGrid& grid = policy.grid;
  const std::size_t m = grid.size();
  const auto acc = accumulated_off_costs(spec);

  // Component tables for the stage after the one being processed.
  std::vector<double> inter(m, 0.0);
  std::vector<double> miss(m);
  std::vector<double> fa(m);
  std::vector<double> energy(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    const double b = grid.point(j);
    const bool positive = policy.activates(n - 1, b);
    miss[j] = positive ? 0.0 : spec.miss_cost * b;
    fa[j] = positive ? spec.fa_cost * (1.0 - b) : 0.0;
  }

  std::vector<double> inter_k(m);
  std::vector<double> miss_k(m);
  std::vector<double> fa_k(m);
  std::vector<double> energy_k(m);
  for (std::size_t k = n - 1; k-- > 0;) {
    const auto& next = spec.stages[k + 1];
    for (std::size_t j = 0; j < m; ++j) {
      const double b = grid.point(j);
      if (policy.activates(k, b)) {
        inter_k[j] = expected_value(next.model, inter, grid, b);
        miss_k[j] = expected_value(next.model, miss, grid, b);
        fa_k[j] = expected_value(next.model, fa, grid, b);
        energy_k[j] = next.on_cost + expected_value(next.model, energy, grid, b);
      } else {
        inter_k[j] = spec.miss_cost * b;
        miss_k[j] = 0.0;
        fa_k[j] = 0.0;
        energy_k[j] = acc[k + 1];
      }
    }
    std::swap(inter, inter_k);
    std::swap(miss, miss_k);
    std::swap(fa, fa_k);
    std::swap(energy, energy_k);
  }

  const auto& first = spec.stages[0];
  const double pi0 = spec.prior.value();
  RiskReport r;
  r.inter_miss = expected_value(first.model, inter, grid, pi0);
  r.final_miss = expected_value(first.model, miss, grid, pi0);
  r.final_fa = expected_value(first.model, fa, grid, pi0);
  r.energy = first.on_cost + expected_value(first.model, energy, grid, pi0);
  r.weighted_energy = policy.lambda * r.energy;
  r.total = policy.root_value;
  return r;
}

std::vector<std::vector<BeliefAtom>> reachable_atoms(const SystemSpec& spec,
                                                     const Policy& policy) {
  check_policy(spec, policy);
  std::vector<std::vector<BeliefAtom>> levels(spec.size());
  std::vector<BeliefAtom> incoming{{spec.prior.value(), 1.0}};
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const auto& model = spec.stages[k].model;
    auto& out = levels[k];
    out.reserve(incoming.size() * model.alphabet_size());
    for (const auto& atom : incoming) {
      for (std::size_t y = 0; y < model.alphabet_size(); ++y) {
        const Step s = step(model, atom.belief, y);
        if (s.evidence == 0.0) continue;
        out.push_back({s.posterior, atom.weight * s.evidence});
      }
    }
    // Merge atoms that coincide up to rounding; keeps the support small when
    // clipped ratios send many symbols to the same posterior.
    std::sort(out.begin(), out.end(),
              [](const BeliefAtom& a, const BeliefAtom& b) { return a.belief < b.belief; });
    std::vector<BeliefAtom> merged;
    for (const auto& a : out) {
      if (!merged.empty() && a.belief - merged.back().belief <= 1e-14 &&
          policy.activates(k, a.belief) == policy.activates(k, merged.back().belief)) {
        auto& b = merged.back();
        const double w = b.weight + a.weight;
        b.belief = (b.belief * b.weight + a.belief * a.weight) / w;
        b.weight = w;
      } else {
        merged.push_back(a);
      }
    }
    out = std::move(merged);
    incoming.clear();
    if (k + 1 < spec.size()) {
      for (const auto& a : out) {
        if (policy.activates(k, a.belief)) incoming.push_back(a);
      }
    }
  }
  return levels;
}

RiskReport evaluate_exact(const SystemSpec& spec, const Policy& policy) {
  const auto levels = reachable_atoms(spec, policy);
  const auto acc = accumulated_off_costs(spec);
  const std::size_t n = spec.size();
  RiskReport r;
  r.energy = spec.stages[0].on_cost;
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& a : levels[k]) {
      const bool on = policy.activates(k, a.belief);
      if (k + 1 == n) {
        if (on) r.final_fa += a.weight * spec.fa_cost * (1.0 - a.belief);
        else r.final_miss += a.weight * spec.miss_cost * a.belief;
      } else if (on) {
        r.energy += a.weight * spec.stages[k + 1].on_cost;
      } else {
        r.inter_miss += a.weight * spec.miss_cost * a.belief;
        r.energy += a.weight * acc[k + 1];
      }
    }
  }
  r.weighted_energy = policy.lambda * r.energy;
  r.total = r.weighted_energy + r.inter_miss + r.final_miss + r.final_fa;
  return r;
}

std::pair<double, double> achievable_energy(const SystemSpec& spec) {
  const auto acc = accumulated_off_costs(spec);
  double all = 0.0;
  for (const auto& s : spec.stages) all += s.on_cost;
  return {spec.stages[0].on_cost + acc[1], all};
}

Calibration calibrate_lambda(const SystemSpec& spec, double budget, const BeliefGrid& grid) {
  const auto [floor, ceiling] = achievable_energy(spec);
  const double slack = 1e-9 * std::max(1.0, ceiling);
  if (budget < floor - slack) {
    fail(ErrorKind::infeasible_budget,
         "budget " + std::to_string(budget) + " mJ/frame is below the achievable range [" +
             std::to_string(floor) + ", " + std::to_string(ceiling) + "]");
  }

  auto run = [&](double lambda) {
    SystemSpec s = spec;
    s.lambda = lambda;
    Calibration c{lambda, solve(s, grid), {}};
    c.report = evaluate_exact(s, c.policy);
    return c;
  };

  Calibration low = run(0.0);
  if (low.report.energy <= budget + slack) return low;

  double hi_lambda = 1e-6;
  Calibration high = run(hi_lambda);
  for (int k = 0; high.report.energy > budget + slack; ++k) {
    if (k > 200) fail(ErrorKind::numerical, "lambda search failed to reach the budget");
    hi_lambda *= 2.0;
    high = run(hi_lambda);
  }
  double lo_lambda = hi_lambda == 1e-6 ? 0.0 : hi_lambda / 2.0;

  // Energy is nonincreasing in lambda; keep `high` feasible.
  while (hi_lambda - lo_lambda > 1e-6 * hi_lambda &&
         std::abs(high.report.energy - budget) > 1e-4) {
    const double mid = 0.5 * (lo_lambda + hi_lambda);
    Calibration c = run(mid);
    if (c.report.energy <= budget + slack) {
      hi_lambda = mid;
      high = std::move(c);
    } else {
      lo_lambda = mid;
    }
  }
  return high;
}

double early_positive_threshold(const SystemSpec& spec, const Policy& policy, std::size_t k) {
  check_policy(spec, policy);
  const auto acc = accumulated_off_costs(spec);
  const auto& values = policy.values[k].values;
  double best = -1.0;
  for (std::size_t j = 0; j < values.size(); ++j) {
    const double b = policy.grid.point(j);
    if (values[j] - (spec.fa_cost * (1.0 - b) + policy.lambda * acc[k + 1]) < 0.0) best = b;
  }
  return best;
}

std::vector<bool> check_cascade_optimality(const SystemSpec& spec, const Policy& policy) {
  std::vector<bool> out;
  for (std::size_t k = 0; k + 1 < spec.size(); ++k) {
    out.push_back(early_positive_threshold(spec, policy, k) > policy.bounds[k].hi);
  }
  return out;
}

SystemSpec drop_stage(const SystemSpec& spec, std::size_t k) {
  if (k >= spec.size()) fail(ErrorKind::input, "no such stage");
  if (spec.size() <= 2) fail(ErrorKind::input, "cannot drop a stage from a two-stage cascade");
  if (k + 1 == spec.size()) fail(ErrorKind::input, "the last stage cannot be dropped");
  SystemSpec out = spec;
  out.stages[k + 1].on_cost += spec.stages[k].on_cost;
  out.stages[k + 1].off_cost += spec.stages[k].off_cost;
  out.stages.erase(out.stages.begin() + static_cast<std::ptrdiff_t>(k));
  assign_bounds(out);
  return out;
}

}  // namespace guided
