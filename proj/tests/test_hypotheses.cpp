#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/hypotheses.hpp"
#include "wclt/oracle.hpp"
#include "wclt/stats.hpp"

using namespace wclt;

namespace {

Observable coord0() {
  return {[](std::span<const double> x) { return x[0]; }, 1.0, "x0"};
}

// exact sampler for the OU stationary law N(0, sigma^2/(2 theta))
EmpiricalMeasure ou_stationary_cloud(double theta, double sigma, std::size_t n,
                                     std::uint64_t seed) {
  SplitRng rng = SplitRng::derive(seed, "ou-stat");
  const double sd = sigma / std::sqrt(2.0 * theta);
  std::vector<Point> pts(n);
  for (auto& p : pts) p = {sd * rng.next_gaussian()};
  return EmpiricalMeasure::from_points(pts);
}

}  // namespace

TEST_SUITE("hypotheses") {
  TEST_CASE("coupled OU fit recovers theta exactly up to fit noise") {
    const OUProcess ou(0.5, 1.0, 1);
    std::vector<double> times;
    for (int k = 0; k <= 10; ++k) times.push_back(0.3 * k);
    ContractionFitOptions opts;
    opts.coupled = true;
    const auto fit = contraction_fit(ou, Point{0.0}, Point{1.0}, times, 256, 42, opts);
    CHECK(std::abs(fit.gamma_hat - 0.5) <= 0.02);
    // synchronous coupling removes the noise: the measured curve is exact
    for (std::size_t k = 0; k < fit.times.size(); ++k)
      CHECK(fit.measured_d1[k] ==
            doctest::Approx(std::exp(-0.5 * fit.times[k])).epsilon(1e-9));
    // envelope invariant
    for (std::size_t k = 0; k < fit.fit_points; ++k)
      CHECK(fit.measured_d1[k] <=
            fit.c_hat * std::exp(-fit.gamma_hat * fit.times[k]) * fit.measured_d1[0] *
                (1.0 + 1e-9));
    CHECK(fit.c_hat >= 1.0 - 1e-9);
  }

  TEST_CASE("identical initial laws refuse the fit") {
    const OUProcess ou(1.0, 1.0, 1);
    const std::vector<double> times{0.0, 0.5, 1.0, 1.5};
    ContractionFitOptions opts;
    opts.coupled = true;
    CHECK_THROWS_AS(contraction_fit(ou, Point{0.7}, Point{0.7}, times, 256, 7, opts),
                    CheckFailure);
  }

  TEST_CASE("two-state chain fit matches the spectral gap within 10%") {
    // Q = [[-1,1],[1,-1]]: d1(t) = e^{-2t}
    const GeneratorMatrix gen({-1, 1, 1, -1}, 2);
    const CtmcProcess model(gen);
    std::vector<double> times;
    for (int k = 0; k <= 8; ++k) times.push_back(0.15 * k);
    const auto fit = contraction_fit(model, Point{0.0}, Point{1.0}, times, 40000, 99);
    CHECK(std::abs(fit.gamma_hat - 2.0) <= 0.1);
    CHECK(fit.w1_method == "finite-lp");
  }

  TEST_CASE("lyapunov report approaches the stationary Gaussian third moment") {
    // E|X_inf|^3 = 2 sqrt(2/pi) v^{3/2}, v = 1/2
    const OUProcess ou(1.0, 1.0, 1);
    std::vector<double> times{0.0, 1.0, 2.0, 4.0, 6.0, 8.0};
    const auto rep = lyapunov_report(ou, Point{0.0}, 1.0, times, 20000, 5, 0.01);
    const double target = 2.0 * std::sqrt(2.0 / M_PI) * std::pow(0.5, 1.5);
    CHECK(std::abs(rep.values.back() - target) <= rep.halfwidths.back());
    CHECK_FALSE(rep.divergence_suspect);
    CHECK(rep.sup_estimate == *std::max_element(rep.values.begin(), rep.values.end()));
  }

  TEST_CASE("lyapunov report is flat from a stationary start") {
    const OUProcess ou(1.0, 1.0, 1);
    const auto mu = ou_stationary_cloud(1.0, 1.0, 20000, 123);
    std::vector<double> times{0.0, 1.0, 2.0, 4.0};
    const auto rep = lyapunov_report(ou, mu, 0.5, times, 20000, 6, 0.01);
    for (std::size_t k = 1; k < rep.values.size(); ++k)
      CHECK(std::abs(rep.values[k] - rep.values[0]) <=
            rep.halfwidths[k] + rep.halfwidths[0]);
  }

  TEST_CASE("noiseless contraction decays the moment monotonically") {
    const OUProcess ou(1.0, 0.0, 1);
    std::vector<double> times{0.0, 0.5, 1.0, 2.0};
    const auto rep = lyapunov_report(ou, Point{2.0}, 0.5, times, 10, 11, 0.01);
    for (std::size_t k = 1; k < rep.values.size(); ++k)
      CHECK(rep.values[k] < rep.values[k - 1]);
    CHECK_FALSE(rep.divergence_suspect);
  }

  TEST_CASE("one-state chain has identically zero moment") {
    const GeneratorMatrix one({0.0}, 1);
    const CtmcProcess model(one);
    const auto rep = lyapunov_report(model, Point{0.0}, 0.5, {0.0, 1.0, 2.0}, 200, 3, 1.0);
    for (double v : rep.values) CHECK(v == 0.0);
  }

  TEST_CASE("local moment report: degenerate radius reduces to the center start") {
    const OUProcess ou(1.0, 1.0, 1);
    const auto rep0 = local_moment_report(ou, {0.0}, 0.0, 1.0, 4.0, 8, 4000, 13, 0.01);
    CHECK(*rep0.ball_radius == 0.0);
    CHECK_FALSE(rep0.divergence_suspect);
    CHECK(rep0.sup_estimate > 0.0);
  }

  TEST_CASE("local moment report: boundary starts dominate for the OU ball") {
    const OUProcess ou(1.0, 1.0, 1);
    const auto rep = local_moment_report(ou, {0.0}, 2.0, 1.0, 3.0, 8, 4000, 17, 0.01);
    std::vector<double> center_times{0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    const auto center = lyapunov_report(ou, Point{0.0}, 1.0, center_times, 4000, 17, 0.01);
    CHECK(rep.sup_estimate >= center.sup_estimate - 1e-9);
    CHECK(*rep.ball_radius == 2.0);
  }

  TEST_CASE("stochastic continuity: OU short-time distances shrink like sqrt(t)") {
    const OUProcess ou(1.0, 1.0, 1);
    auto rep = stochastic_continuity_check(ou, {1.5}, {0.001, 0.004, 0.016, 0.064, 0.256},
                                           8000, 23, 0.001);
    CHECK(rep.pass);
    CHECK(rep.times.front() == 0.0);
    CHECK(rep.d1_values.front() == 0.0);  // t = 0 entry is exact
  }

  TEST_CASE("stochastic continuity: deterministic flow shrinks linearly") {
    const OUProcess flow(1.0, 0.0, 1);
    auto rep = stochastic_continuity_check(flow, {2.0}, {0.001, 0.01, 0.1}, 16, 29, 0.001);
    CHECK(rep.pass);
    // d1 = distance traveled = 2 (1 - e^{-t})
    for (std::size_t k = 1; k < rep.times.size(); ++k)
      CHECK(rep.d1_values[k] ==
            doctest::Approx(2.0 * (1.0 - std::exp(-rep.times[k]))).epsilon(1e-9));
  }

  TEST_CASE("cesaro averaged contraction bound holds for OU") {
    const OUProcess ou(1.0, 1.0, 1);
    std::vector<double> times;
    for (int k = 0; k <= 10; ++k) times.push_back(0.3 * k);
    ContractionFitOptions opts;
    opts.coupled = true;
    const auto fit = contraction_fit(ou, Point{0.0}, Point{1.0}, times, 256, 31, opts);
    const auto mustar = ou_stationary_cloud(1.0, 1.0, 4096, 37);
    const auto rep = cesaro_contraction_check(ou, Point{1.0}, {0.5, 1.0, 2.0, 4.0, 8.0},
                                              2000, 41, fit, mustar, 0.02, 0.01);
    CHECK(rep.pass);
    // the right side decays like 1/t
    CHECK(rep.rhs.back() < rep.rhs.front());
    // fitted growth constant on sup_t <delta_x P^t, rho_0>
    CHECK(rep.sup_mean_rho > 0.0);
    CHECK(rep.fitted_C <= 1.5);
  }

  TEST_CASE("semigroup Lipschitz seminorm decays at the contraction rate") {
    const OUProcess ou(1.0, 1.0, 1);
    std::vector<Point> xs{{-1.0}, {-0.25}, {0.5}, {1.25}};
    std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
    const auto rep = semigroup_lipschitz_decay(ou, coord0(), xs, times, 4000, 43, 0.01);
    // P^t psi(x) = e^{-t} x under common noise: quotient decays exactly at rate 1
    CHECK(rep.fitted_exponent >= 0.85);
    CHECK(rep.quotients.front() == doctest::Approx(1.0).epsilon(1e-9));
  }

  TEST_CASE("empirical_d1 picks the method the space demands") {
    const auto disc = MetricSpace::discrete({0, 1, 1, 0}, 2);
    const EmpiricalMeasure a({0.0, 1.0}, 1), b({1.0, 1.0}, 1);
    CHECK(empirical_d1(a, b, disc).method == "finite-lp");

    const auto e1 = MetricSpace::euclidean(1);
    CHECK(empirical_d1(a, b, e1).method == "sorted-1d");

    const auto e2 = MetricSpace::euclidean(2);
    const EmpiricalMeasure c2({0.0, 0.0, 1.0, 0.0}, 2), d2({1.0, 1.0, 0.0, 1.0}, 2);
    CHECK(empirical_d1(c2, d2, e2).method == "assignment");

    const auto e4 = MetricSpace::euclidean(4);
    std::vector<double> flat(4 * 8, 0.25);
    const EmpiricalMeasure c4(flat, 4), d4(std::vector<double>(4 * 8, 0.5), 4);
    const auto r = empirical_d1(c4, d4, e4);
    CHECK(r.method == "sliced");
    CHECK_FALSE(r.is_exact);
  }
}
