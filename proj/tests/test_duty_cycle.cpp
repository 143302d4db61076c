#include <doctest.h>

#include <cmath>

#include "guided/duty_cycle.hpp"
#include "guided/errors.hpp"
#include "guided/io.hpp"

using namespace guided;

namespace {

DutyCycleSpec sample_spec(double rho) {
  return {rho, 10.0, 1.0, FeatureModel({0.6, 0.3, 0.1}, {0.1, 0.3, 0.6}), 3.0, 1.0, Belief(0.2)};
}

}  // namespace

TEST_SUITE("duty_cycle") {
  TEST_CASE("always off and always on") {
    const auto off = dc_risk(sample_spec(0.0), 0.01);
    CHECK(off.final_fa == 0.0);
    CHECK(off.final_miss == doctest::Approx(3.0 * 0.2));
    CHECK(off.energy == 1.0);
    const auto on = dc_risk(sample_spec(1.0), 0.01);
    // Posteriors at prior 0.2 are 0.04, 0.2, 0.6: only y = 2 clears 0.25.
    CHECK(on.final_miss == doctest::Approx(3.0 * 0.2 * 0.4));
    CHECK(on.final_fa == doctest::Approx(1.0 * 0.8 * 0.1));
    CHECK(on.energy == 10.0);
  }

  TEST_CASE("risk is affine in the duty factor") {
    const double lambda = 0.02;
    const double r0 = dc_risk(sample_spec(0.0), lambda).total;
    const double r1 = dc_risk(sample_spec(1.0), lambda).total;
    for (int i = 0; i <= 10; ++i) {
      const double rho = i / 10.0;
      CHECK(std::abs(dc_risk(sample_spec(rho), lambda).total - (r0 + rho * (r1 - r0))) < 1e-12);
    }
  }

  TEST_CASE("energy-equivalent duty factor") {
    CHECK(energy_equivalent_rho(5.5, 10.0, 1.0).rho == doctest::Approx(0.5));
    const auto low = energy_equivalent_rho(0.5, 10.0, 1.0);
    CHECK(low.rho == 0.0);
    CHECK(low.clamped);
    const auto high = energy_equivalent_rho(12.0, 10.0, 1.0);
    CHECK(high.rho == 1.0);
    CHECK(high.clamped);
    CHECK_THROWS_AS(energy_equivalent_rho(1.0, 1.0, 1.0), Error);
    CHECK_THROWS_AS(dc_risk(sample_spec(1.5), 0.0), Error);
  }

  TEST_CASE("dominance flags imply the cascade beats the ideal duty-cycler") {
    const auto spec = build_system(make_fixture(), 0.1);
    const auto p = solve(spec);
    const auto r = evaluate_exact(spec, p);
    const auto v = dominance_check(spec, p, r);
    CHECK(v.dominates());
    for (int i = 0; i <= 10; ++i) {
      CHECK(r.total <= dc_risk(ideal_duty_cycle(spec, i / 10.0), p.lambda).total);
    }
  }
}
