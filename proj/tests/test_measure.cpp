#include "doctest.h"

#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/measure.hpp"
#include "wclt/rng.hpp"

using namespace wclt;

TEST_SUITE("measure") {
  TEST_CASE("moment: zero at the reference point") {
    const auto space = MetricSpace::euclidean(1);
    const auto mu = EmpiricalMeasure::dirac({0.0});
    CHECK(moment(mu, space, 1.0) == 0.0);
    CHECK(moment(mu, space, 3.7) == 0.0);
  }

  TEST_CASE("moment: symmetric pair, p = 2") {
    const auto space = MetricSpace::euclidean(1);
    const auto mu = EmpiricalMeasure::from_points({{1.0}, {-1.0}});
    CHECK(moment(mu, space, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  }

  TEST_CASE("moment: weighted atoms, fractional exponent") {
    // 0.5 * 3^2.5, evaluated by hand
    const auto space = MetricSpace::euclidean(1);
    const EmpiricalMeasure mu({0.0, 3.0}, 1, {0.5, 0.5});
    CHECK(moment(mu, space, 2.5) == doctest::Approx(0.5 * std::pow(3.0, 2.5)).epsilon(1e-13));
  }

  TEST_CASE("moment rejects non-finite atoms and bad p") {
    const auto space = MetricSpace::euclidean(1);
    CHECK_THROWS_AS(EmpiricalMeasure({std::nan("")}, 1), InvalidInput);
    const auto mu = EmpiricalMeasure::dirac({1.0});
    CHECK_THROWS_AS(moment(mu, space, 0.5), InvalidInput);
  }

  TEST_CASE("moment is p-homogeneous under metric scaling") {
    // weighted-norm metric with weight lambda scales all distances by lambda
    SplitRng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
      const double lambda = 0.5 + 2.0 * rng.next_uniform();
      const double p = 1.0 + 2.0 * rng.next_uniform();
      std::vector<Point> pts;
      for (int i = 0; i < 8; ++i) pts.push_back({rng.next_gaussian(), rng.next_gaussian()});
      const auto mu = EmpiricalMeasure::from_points(pts);
      const auto base = MetricSpace::euclidean(2);
      const auto scaled = MetricSpace::weighted({lambda, lambda});
      CHECK(moment(mu, scaled, p) ==
            doctest::Approx(std::pow(lambda, p) * moment(mu, base, p)).epsilon(1e-11));
    }
  }

  TEST_CASE("duplicated atoms with merged weights give identical moments") {
    const auto space = MetricSpace::euclidean(1);
    const EmpiricalMeasure split({2.0, 2.0, -1.0}, 1, {0.25, 0.25, 0.5});
    const EmpiricalMeasure merged({2.0, -1.0}, 1, {0.5, 0.5});
    for (double p : {1.0, 2.0, 2.5})
      CHECK(moment(split, space, p) == doctest::Approx(moment(merged, space, p)).epsilon(1e-12));
  }

  TEST_CASE("weights must sum to one within 1e-12") {
    CHECK_THROWS_AS(EmpiricalMeasure({0.0, 1.0}, 1, {0.5, 0.499}), InvalidInput);
    CHECK_NOTHROW(EmpiricalMeasure({0.0, 1.0}, 1, {0.5, 0.5}));
  }

  TEST_CASE("lipschitz_lower_bound: identity, constant, hand case") {
    const auto space = MetricSpace::euclidean(1);
    Observable ident{[](std::span<const double> x) { return x[0]; }, 1.0, "id"};
    std::vector<std::pair<Point, Point>> pairs{{{0.0}, {1.0}}};
    CHECK(lipschitz_lower_bound(ident, pairs, space).bound == doctest::Approx(1.0));

    Observable constant{[](std::span<const double>) { return 3.0; }, 0.0, "const"};
    CHECK(lipschitz_lower_bound(constant, pairs, space).bound == 0.0);

    // psi(x) = 2x + sin(x) on (0, pi): |2 pi + 0 - 0| / pi = 2
    Observable f{[](std::span<const double> x) { return 2 * x[0] + std::sin(x[0]); }, 3.0, "f"};
    std::vector<std::pair<Point, Point>> pp{{{0.0}, {M_PI}}};
    CHECK(lipschitz_lower_bound(f, pp, space).bound == doctest::Approx(2.0).epsilon(1e-12));
  }

  TEST_CASE("lipschitz_lower_bound skips coincident pairs, errors when all coincide") {
    const auto space = MetricSpace::euclidean(1);
    Observable ident{[](std::span<const double> x) { return x[0]; }, 1.0, "id"};
    std::vector<std::pair<Point, Point>> pairs{{{1.0}, {1.0}}, {{0.0}, {2.0}}};
    const auto r = lipschitz_lower_bound(ident, pairs, space);
    CHECK(r.pairs_skipped == 1);
    CHECK(r.bound == doctest::Approx(1.0));
    std::vector<std::pair<Point, Point>> bad{{{1.0}, {1.0}}};
    CHECK_THROWS_AS(lipschitz_lower_bound(ident, bad, space), InvalidInput);
  }

  TEST_CASE("lipschitz_lower_bound is monotone in the sample set") {
    const auto space = MetricSpace::euclidean(1);
    Observable f{[](std::span<const double> x) { return std::cos(3 * x[0]); }, 3.0, "cos3"};
    SplitRng rng(7);
    std::vector<std::pair<Point, Point>> pairs;
    double prev = 0.0;
    for (int k = 0; k < 40; ++k) {
      pairs.push_back({{4 * rng.next_uniform()}, {4 * rng.next_uniform()}});
      if (pairs.back().first[0] == pairs.back().second[0]) continue;
      const double cur = lipschitz_lower_bound(f, pairs, space).bound;
      CHECK(cur >= prev - 1e-15);
      prev = cur;
    }
  }

  TEST_CASE("validate_observable enforces declared bounds with 1e-9 slack") {
    const auto space = MetricSpace::euclidean(1);
    Observable lying{[](std::span<const double> x) { return 2.0 * x[0]; }, 1.0, "lying"};
    std::vector<std::pair<Point, Point>> pairs{{{0.0}, {1.0}}};
    CHECK_THROWS_AS(validate_observable(lying, pairs, space), InvalidInput);
    Observable honest{[](std::span<const double> x) { return 2.0 * x[0]; }, 2.0, "honest"};
    CHECK_NOTHROW(validate_observable(honest, pairs, space));
  }

  TEST_CASE("discrete metric table validation and lookup") {
    CHECK_THROWS_AS(MetricSpace::discrete({0, 1, 2, 0}, 2), InvalidInput);  // asymmetric
    const auto space = MetricSpace::discrete({0, 1, 1, 0}, 2);
    const Point a{0.0}, b{1.0};
    CHECK(space.distance(a, b) == 1.0);
    CHECK(space.distance(a, a) == 0.0);
  }

  TEST_CASE("metric sanity on sampled pairs and triples") {
    SplitRng rng(99);
    const auto space = MetricSpace::weighted({1.0, 2.0, 0.5});
    for (int rep = 0; rep < 50; ++rep) {
      Point x{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
      Point y{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
      Point z{rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
      CHECK(space.distance(x, y) == doctest::Approx(space.distance(y, x)));
      CHECK(space.distance(x, y) >= 0.0);
      CHECK(space.distance(x, x) == 0.0);
      CHECK(space.distance(x, z) <= space.distance(x, y) + space.distance(y, z) + 1e-12);
    }
  }
}
