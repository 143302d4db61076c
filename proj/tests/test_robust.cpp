#include <doctest.h>

#include <cmath>

#include "guided/errors.hpp"
#include "guided/io.hpp"
#include "guided/robust.hpp"
#include "oracles.hpp"

using namespace guided;

namespace {

// Independent check that a robust model is the normalized Huber pair of
// `nominal` for the reported band.
void check_huber(const FeatureModel& nominal, const UncertaintyParams& u, const RobustModel& rm) {
  std::vector<double> q0, q1;
  oracle::huber_pair(nominal, u.eps0, u.eps1, u.nu0, u.nu1, rm.band.lower, rm.band.upper, q0, q1);
  double s0 = 0, s1 = 0;
  for (std::size_t y = 0; y < q0.size(); ++y) s0 += q0[y], s1 += q1[y];
  CHECK(std::abs(s0 - 1.0) < 1e-8);
  CHECK(std::abs(s1 - 1.0) < 1e-8);
  CHECK(s0 - 1.0 == doctest::Approx(rm.residual0).epsilon(1e-6).scale(1e-14));
  for (std::size_t y = 0; y < q0.size(); ++y) {
    CHECK(rm.model.p0(y) == doctest::Approx(q0[y] / s0).epsilon(1e-12));
    CHECK(rm.model.p1(y) == doctest::Approx(q1[y] / s1).epsilon(1e-12));
  }
}

}  // namespace

TEST_SUITE("robust") {
  TEST_CASE("zero contamination passes the model through") {
    const FeatureModel m({0.6, 0.3, 0.1}, {0.1, 0.3, 0.6});
    const auto rm = least_favorable(m, {});
    CHECK(rm.model == m);
    CHECK(rm.band.lower == doctest::Approx(1.0 / 6.0));
    CHECK(rm.band.upper == doctest::Approx(6.0));
  }

  TEST_CASE("symmetric three-symbol model clips both end bins") {
    const FeatureModel m({0.8, 0.15, 0.05}, {0.05, 0.15, 0.8});
    const UncertaintyParams u{0.1, 0.1, 0.1, 0.1};
    const auto rm = least_favorable(m, u);
    check_huber(m, u, rm);
    CHECK(rm.band.lower > 0.0625);
    CHECK(rm.band.upper < 16.0);
    const double c = (1 - u.eps1) / (1 - u.eps0);
    const double fix = (1 + rm.residual0) / (1 + rm.residual1);
    CHECK(likelihood_ratio(rm.model, 0) == doctest::Approx(c * rm.band.lower * fix).epsilon(1e-12));
    CHECK(likelihood_ratio(rm.model, 2) == doctest::Approx(c * rm.band.upper * fix).epsilon(1e-12));
  }

  TEST_CASE("one-sided contamination solves a single equation") {
    const FeatureModel m({0.7, 0.3}, {0.2, 0.8});
    const UncertaintyParams u{0.1, 0.0, 0.0, 0.0};
    const auto band = solve_band(m, u);
    CHECK(band.lower == doctest::Approx(ratio_range(m).lower));
    const auto rm = least_favorable(m, u);
    check_huber(m, u, rm);
  }

  TEST_CASE("ten percent contamination on a 100-bin model gives an interior band") {
    const auto f = make_fixture();
    const UncertaintyParams u{0.1, 0.1, 0.1, 0.1};
    for (int k = 0; k < 2; ++k) {
      const FeatureModel m(f.stages[k].p0, f.stages[k].p1);
      const auto rm = least_favorable(m, u);
      check_huber(m, u, rm);
      CHECK(rm.band.lower > ratio_range(m).lower);
      CHECK(rm.band.upper < ratio_range(m).upper);
      CHECK(std::abs(rm.residual0) < 1e-8);
      CHECK(std::abs(rm.residual1) < 1e-8);
    }
  }

  TEST_CASE("errors") {
    const FeatureModel m({0.7, 0.3}, {0.2, 0.8});
    try {
      solve_band(m, {1.0, 0.0, 0.0, 0.0});
      FAIL("expected degenerate");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::degenerate);
    }
    const FeatureModel weak({0.51, 0.49}, {0.49, 0.51});
    try {
      solve_band(weak, {0.1, 0.1, 0.1, 0.1});
      FAIL("expected infeasible band");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::infeasible_band);
    }
    CHECK_THROWS_AS(solve_band(m, {-0.1, 0, 0, 0}), Error);
  }

  TEST_CASE("posterior bounds") {
    const auto b = posterior_bounds({0.5, 0.5}, {0.5, 2.0});
    CHECK(b.lo == doctest::Approx(1.0 / 3.0));
    CHECK(b.hi == doctest::Approx(2.0 / 3.0));
    const auto same = posterior_bounds({0.2, 0.4}, {1.0, 1.0});
    CHECK(same.lo == doctest::Approx(0.2));
    CHECK(same.hi == doctest::Approx(0.4));
    const auto zero = posterior_bounds({0.0, 0.0}, {0.5, 2.0});
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi == 0.0);
  }

  TEST_CASE("robust model is pessimistic and idempotent") {
    const FeatureModel m({0.5, 0.3, 0.15, 0.05}, {0.05, 0.15, 0.3, 0.5});
    const auto rm = least_favorable(m, {0.1, 0.1, 0.1, 0.1});
    for (double pi = 0.05; pi < 1.0; pi += 0.05) {
      double nominal = 0, robust = 0;
      for (std::size_t y = 0; y < 4; ++y) {
        nominal += std::min(3 * pi * m.p1(y), (1 - pi) * m.p0(y));
        robust += std::min(3 * pi * rm.model.p1(y), (1 - pi) * rm.model.p0(y));
      }
      CHECK(robust >= nominal - 1e-12);
    }
    const auto twice = least_favorable(rm.model, {});
    CHECK(twice.model == rm.model);
  }
}
