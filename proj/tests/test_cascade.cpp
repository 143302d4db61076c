#include <doctest.h>

#include <cmath>

#include "guided/errors.hpp"
#include "guided/io.hpp"
#include "guided/simulator.hpp"
#include "oracles.hpp"

using namespace guided;

TEST_SUITE("cascade") {
  TEST_CASE("final threshold is C_A / (C_A + C_M)") {
    auto spec = build_system(make_fixture(), 0.1);
    const auto p = solve(spec);
    CHECK(p.thresholds.back() == 0.25);
    spec.miss_cost = 1.0;
    spec.fa_cost = 1.0;
    CHECK(solve(spec).thresholds.back() == 0.5);
  }

  TEST_CASE("without an energy price stages never censor") {
    auto spec = build_system(make_fixture(), 0.1);
    spec.lambda = 0.0;
    const auto p = solve(spec);
    for (std::size_t k = 0; k + 1 < spec.size(); ++k) {
      CHECK(p.thresholds[k] == spec.stages[k].bounds.lo);
    }
  }

  TEST_CASE("value tables are concave with V_i(0) = lambda * idle") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto spec = oracle::random_spec(seed, 3, 7);
      const auto p = solve(spec, BeliefGrid(401));
      const auto acc = accumulated_off_costs(spec);
      for (std::size_t k = 0; k < spec.size(); ++k) {
        const auto& v = p.values[k].values;
        CHECK(std::abs(v[0] - *spec.lambda * acc[k + 1]) < 1e-12);
        for (std::size_t j = 1; j + 1 < v.size(); ++j) CHECK(v[j - 1] - 2 * v[j] + v[j + 1] <= 1e-9);
      }
    }
  }

  TEST_CASE("exact evaluation matches path enumeration") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const auto spec = oracle::random_spec(seed, 3, 5);
      const auto p = solve(spec);
      const auto r = evaluate_exact(spec, p);
      const auto o = oracle::path_risk(spec, p.switch_points, *spec.lambda);
      CHECK(r.total == doctest::Approx(o.total).epsilon(1e-12));
      CHECK(r.energy == doctest::Approx(o.energy).epsilon(1e-12));
      CHECK(r.inter_miss == doctest::Approx(o.inter_miss).epsilon(1e-12));
      CHECK(r.final_fa == doctest::Approx(o.final_fa).epsilon(1e-12));
      const auto g = evaluate(spec, p);
      CHECK(std::abs(g.total - (g.weighted_energy + g.inter_miss + g.final_miss + g.final_fa)) < 1e-9);
      CHECK(std::abs(g.total - p.root_value) < 1e-9);
    }
  }

  TEST_CASE("dynamic program beats brute-force threshold pairs") {
    const auto spec = oracle::random_spec(99, 2, 4);
    const auto p = solve(spec, BeliefGrid(101));
    const double brute = oracle::brute_force_pair(spec, *spec.lambda, 101);
    CHECK(p.root_value <= brute + 1e-9);
    CHECK(p.root_value >= brute - 2 * (spec.miss_cost + spec.fa_cost) / 100.0);
  }

  TEST_CASE("validation") {
    auto spec = oracle::random_spec(3, 2, 3);
    spec.stages.pop_back();
    CHECK_THROWS_AS(spec.validate(), Error);
    auto neg = oracle::random_spec(3, 2, 3);
    neg.lambda = -1.0;
    CHECK_THROWS_AS(solve(neg), Error);
    auto off = oracle::random_spec(3, 2, 3);
    off.stages[1].off_cost = off.stages[1].on_cost;
    CHECK_THROWS_AS(off.validate(), Error);
  }

  TEST_CASE("lambda calibration meets the budget") {
    auto spec = oracle::random_spec(4242, 3, 32);
    const auto [lo, hi] = achievable_energy(spec);
    const double budget = 0.5 * (lo + hi);
    const auto cal = calibrate_lambda(spec, budget);
    CHECK(cal.report.energy <= budget * (1 + 1e-9));
    CHECK(cal.report.energy >= 0.99 * budget);
    spec.lambda = cal.lambda;
    StreamConfig cfg;
    cfg.n_frames = 400'000;
    cfg.seed = 5;
    const auto sim = simulate(cfg, spec, cal.policy);
    CHECK(std::abs(sim.energy - cal.report.energy) < 3 * sim.se_energy + 1e-12);

    CHECK(calibrate_lambda(spec, hi + 1.0).lambda == 0.0);
    try {
      calibrate_lambda(spec, 0.5 * lo);
      FAIL("expected infeasible budget");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible_budget);
      CHECK(std::string(e.what()).find("achievable range") != std::string::npos);
    }
  }

  TEST_CASE("early positive check on the fixture") {
    auto spec = build_system(make_fixture(), 0.1);
    const auto p = solve(spec);
    const auto ok = check_cascade_optimality(spec, p);
    CHECK(ok.size() == 2);
    CHECK(ok[0]);
    CHECK(ok[1]);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(early_positive_threshold(spec, p, k) > p.bounds[k].hi);
    }
  }

  TEST_CASE("dropping a stage folds its costs into the next") {
    const auto spec = build_system(make_fixture(), 0.1);
    const auto two = drop_stage(spec, 1);
    CHECK(two.size() == 2);
    CHECK(two.stages[1].on_cost == doctest::Approx(spec.stages[1].on_cost + spec.stages[2].on_cost));
    CHECK(two.stages[1].off_cost ==
          doctest::Approx(spec.stages[1].off_cost + spec.stages[2].off_cost));
    CHECK(two.stages[1].model == spec.stages[2].model);
  }
}
