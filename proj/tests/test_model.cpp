#include <doctest.h>

#include <cmath>
#include <limits>

#include "guided/errors.hpp"
#include "guided/model.hpp"

using namespace guided;

TEST_SUITE("model") {
  TEST_CASE("feature model validation") {
    CHECK_NOTHROW(FeatureModel({0.5, 0.5}, {0.2, 0.8}));
    CHECK_THROWS_AS(FeatureModel({1.0}, {1.0}), Error);
    CHECK_THROWS_AS(FeatureModel({0.5, 0.5}, {0.2, 0.3, 0.5}), Error);
    CHECK_THROWS_AS(FeatureModel({0.5, 0.6}, {0.2, 0.8}), Error);
    CHECK_THROWS_AS(FeatureModel({1.5, -0.5}, {0.2, 0.8}), Error);
    try {
      FeatureModel({0.5, 0.4}, {0.5, 0.5});
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::input);
    }
  }

  TEST_CASE("likelihood ratio edge cases") {
    const FeatureModel m({0.5, 0.5, 0.0, 0.0}, {0.25, 0.25, 0.5, 0.0});
    CHECK(likelihood_ratio(m, 0) == doctest::Approx(0.5));
    CHECK(std::isinf(likelihood_ratio(m, 2)));
    CHECK(likelihood_ratio(m, 3) == 1.0);
    CHECK(m.monotone_likelihood_ratio());
    const FeatureModel bumpy({0.2, 0.6, 0.2}, {0.4, 0.2, 0.4});
    CHECK_FALSE(bumpy.monotone_likelihood_ratio());
  }

  TEST_CASE("posterior update is Bayes' rule") {
    const FeatureModel m({0.7, 0.3}, {0.2, 0.8});
    const Belief b(0.3);
    const double expect = 0.3 * 0.8 / (0.3 * 0.8 + 0.7 * 0.3);
    CHECK(posterior_update(b, m, 1).value() == doctest::Approx(expect).epsilon(1e-15));
    CHECK(evidence(b, m, 0) + evidence(b, m, 1) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(posterior_update(Belief(0.0), m, 1).value() == 0.0);
    CHECK(posterior_update(Belief(1.0), m, 0).value() == 1.0);
    CHECK(posterior_from_ratio(0.4, std::numeric_limits<double>::infinity()) == 1.0);
    CHECK(posterior_from_ratio(0.4, 1.0) == doctest::Approx(0.4));
  }

  TEST_CASE("belief must lie in the unit interval") {
    CHECK_THROWS_AS(Belief(-0.1), Error);
    CHECK_THROWS_AS(Belief(1.1), Error);
    CHECK_THROWS_AS(Belief(std::nan("")), Error);
  }

  TEST_CASE("grid and interpolation") {
    const BeliefGrid g(11);
    CHECK(g.point(0) == 0.0);
    CHECK(g.point(10) == 1.0);
    CHECK(g.point(3) == 0.3);
    CHECK_THROWS_AS(BeliefGrid(1), Error);
    std::vector<double> v(11);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::sin(static_cast<double>(j));
    for (std::size_t j = 0; j < v.size(); ++j) CHECK(interpolate(v, g, g.point(j)) == v[j]);
    const double mid = interpolate(v, g, 0.35);
    CHECK(mid == doctest::Approx(0.5 * (v[3] + v[4])).epsilon(1e-14));
    CHECK_THROWS_AS(BeliefTable(g, std::vector<double>(5)), Error);
  }
}
