#include <doctest.h>

#include "guided/adaptive.hpp"
#include "guided/errors.hpp"
#include "oracles.hpp"

using namespace guided;

namespace {

SystemSpec monotone_spec() {
  SystemSpec s;
  s.stages.push_back({"a", FeatureModel({0.4, 0.3, 0.2, 0.1}, {0.1, 0.2, 0.3, 0.4}), 1.0, 0.0, {}});
  s.stages.push_back({"b", FeatureModel({0.5, 0.3, 0.15, 0.05}, {0.05, 0.15, 0.3, 0.5}), 8.0, 0.5, {}});
  s.prior = Belief(0.2);
  s.lambda = 0.01;
  assign_bounds(s);
  return s;
}

}  // namespace

TEST_SUITE("adaptive") {
  TEST_CASE("activation targets are probabilities of clearing the threshold") {
    const auto spec = monotone_spec();
    const auto p = solve(spec);
    const auto t = compute_activation_targets(spec, p, p.grid);
    REQUIRE(t.tables.size() == 2);
    const auto& m = spec.stages[1].model;
    for (double b : {0.0, 0.1, 0.3, 0.7, 1.0}) {
      double q = 0;
      for (std::size_t y = 0; y < 4; ++y) {
        if (oracle::post(b, m.p0(y), m.p1(y)) >= 0.25) q += b * m.p1(y) + (1 - b) * m.p0(y);
      }
      CHECK(t.at(1, b) == doctest::Approx(q).epsilon(1e-12));
    }
  }

  TEST_CASE("threshold moves against the rate error and stays in range") {
    const auto spec = monotone_spec();
    const auto p = solve(spec);
    auto s = make_adaptive_state(spec, compute_activation_targets(spec, p, p.grid), 0.1);
    CHECK(s.eta[0] == 2.0);
    CHECK(s.enabled[0]);
    adaptive_step(s, 0, 0.9, 0.5);
    CHECK(s.eta[0] == doctest::Approx(2.04));
    adaptive_step(s, 0, 0.1, 0.5);
    CHECK(s.eta[0] == doctest::Approx(2.0));
    for (int i = 0; i < 1000; ++i) adaptive_step(s, 0, 1.0, 0.0);
    CHECK(s.eta[0] == 4.0);
    for (int i = 0; i < 1000; ++i) adaptive_step(s, 0, 0.0, 1.0);
    CHECK(s.eta[0] == 0.0);
    const double before = s.rate[1];
    observe_activation(s, 1, true);
    CHECK(s.rate[1] == doctest::Approx(before + 0.1 * (1 - before)));
  }

  TEST_CASE("decisions on the raw feature") {
    const auto spec = monotone_spec();
    const auto p = solve(spec);
    auto s = make_adaptive_state(spec, compute_activation_targets(spec, p, p.grid), 1e-3);
    s.eta = {1.5, 2.0};
    CHECK(adaptive_decide(s, 0, 1, 2) == Decision::stop);
    CHECK(adaptive_decide(s, 0, 2, 2) == Decision::proceed);
    CHECK(adaptive_decide(s, 1, 1, 2) == Decision::negative);
    CHECK(adaptive_decide(s, 1, 2, 2) == Decision::positive);
  }

  TEST_CASE("non-monotone stages refuse adaptive mode") {
    auto spec = monotone_spec();
    spec.stages[0].model = FeatureModel({0.2, 0.6, 0.2}, {0.4, 0.2, 0.4});
    assign_bounds(spec);
    const auto p = solve(spec);
    const auto s = make_adaptive_state(spec, compute_activation_targets(spec, p, p.grid), 1e-3);
    CHECK_FALSE(s.enabled[0]);
    CHECK_THROWS_AS(adaptive_decide(s, 0, 1, 2), Error);
    CHECK_THROWS_AS(make_adaptive_state(spec, compute_activation_targets(spec, p, p.grid), 0.0),
                    Error);
  }
}
