#include "doctest.h"

#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/process.hpp"
#include "wclt/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace wclt;

namespace {

Observable coord0() {
  return {[](std::span<const double> x) { return x[0]; }, 1.0, "x0"};
}

std::vector<double> snapshot_coord(const PathEnsemble& e, std::size_t k) {
  std::vector<double> out(static_cast<std::size_t>(e.n_paths));
  for (int p = 0; p < e.n_paths; ++p) out[static_cast<std::size_t>(p)] = e.state(p, k)[0];
  return out;
}

}  // namespace

TEST_SUITE("processes") {
  TEST_CASE("grid validation") {
    CHECK_THROWS_AS(SimGrid::uniform(1.0, 0.3, 1.0), InvalidInput);
    CHECK_THROWS_AS(SimGrid::at_times({0.0, 0.15}, 0.1), InvalidInput);
    const auto g = SimGrid::uniform(2.0, 0.5, 1.0);
    CHECK(g.snapshot_times == std::vector<double>{0.0, 1.0, 2.0});
    CHECK(g.n_steps() == 4);
  }

  TEST_CASE("noiseless OU decays exactly under exponential-euler") {
    const OUProcess ou(0.7, 0.0, 1);
    const auto grid = SimGrid::uniform(2.0, 0.25, 0.5);
    const auto e = simulate_ensemble(ou, Point{3.0}, grid, 4, 9, Integrator::ExponentialEuler);
    for (std::size_t k = 0; k < e.n_times(); ++k)
      CHECK(e.state(0, k)[0] ==
            doctest::Approx(3.0 * std::exp(-0.7 * e.times[k])).epsilon(1e-12));
  }

  TEST_CASE("OU variance matches the closed form at t = 5") {
    // Var X_t = sigma^2 (1 - e^{-2 theta t}) / (2 theta); the exponential
    // integrator samples the transition law exactly, so dt can be coarse
    const OUProcess ou(1.0, 1.0, 1);
    const auto grid = SimGrid::uniform(5.0, 0.05, 5.0);
    const int n = 100000;
    const auto e = simulate_ensemble(ou, Point{0.0}, grid, n, 1234,
                                     Integrator::ExponentialEuler);
    const auto xs = snapshot_coord(e, 1);
    const double var = sample_variance(xs);
    const double target = (1.0 - std::exp(-10.0)) / 2.0;
    const double se = target * std::sqrt(2.0 / (n - 1.0));
    CHECK(std::abs(var - target) <= 4.0 * se);
  }

  TEST_CASE("euler-maruyama needs dt below the stability bound") {
    const OUProcess ou(4.0, 1.0, 1);
    const auto grid = SimGrid::uniform(1.0, 0.5, 1.0);
    CHECK_THROWS_WITH_AS(
        simulate_ensemble(ou, Point{0.0}, grid, 2, 1, Integrator::EulerMaruyama),
        doctest::Contains("unstable dt"), InvalidInput);
  }

  TEST_CASE("parallel and serial drivers are bit-identical at any thread count") {
    const OUProcess ou(1.0, 1.0, 2);
    const auto grid = SimGrid::uniform(1.0, 0.01, 0.5);
    const Observable psi = coord0();
    SimulateOptions so;
    so.accumulate = &psi;
    const auto serial = simulate_ensemble_serial(ou, Point{0.5, -0.5}, grid, 64, 77,
                                                 Integrator::ExponentialEuler, so);
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    for (int t : {1, 2}) {
      omp_set_num_threads(t);
      const auto par = simulate_ensemble(ou, Point{0.5, -0.5}, grid, 64, 77,
                                         Integrator::ExponentialEuler, so);
      CHECK(par.states == serial.states);
      CHECK(par.psi_integrals == serial.psi_integrals);
    }
    omp_set_num_threads(saved);
#else
    const auto par = simulate_ensemble(ou, Point{0.5, -0.5}, grid, 64, 77,
                                       Integrator::ExponentialEuler, so);
    CHECK(par.states == serial.states);
#endif
  }

  TEST_CASE("coupled OU pairs contract deterministically") {
    const OUProcess ou(0.5, 1.0, 1);
    const auto grid = SimGrid::uniform(3.0, 0.01, 1.0);
    const auto [ea, eb] = coupled_pair_simulate(ou, Point{0.0}, Point{1.0}, grid, 16, 3,
                                                Integrator::ExponentialEuler);
    for (int p = 0; p < ea.n_paths; ++p)
      for (std::size_t k = 0; k < ea.n_times(); ++k) {
        const double gap = std::abs(ea.state(p, k)[0] - eb.state(p, k)[0]);
        CHECK(gap == doctest::Approx(std::exp(-0.5 * ea.times[k])).epsilon(1e-12));
      }
  }

  TEST_CASE("coupled pair from equal starts stays identical") {
    const OUProcess ou(1.0, 1.0, 1);
    const auto grid = SimGrid::uniform(1.0, 0.05, 0.5);
    const auto [ea, eb] = coupled_pair_simulate(ou, Point{0.3}, Point{0.3}, grid, 8, 4,
                                                Integrator::ExponentialEuler);
    CHECK(ea.states == eb.states);
  }

  TEST_CASE("dissipative SDE: coupled log-distance decays at rate omega") {
    // A = diag(1,2,3), F = 0.5 sin coordinatewise: omega = 1 - 0.5 = 0.5
    const std::vector<double> A{1, 0, 0, 0, 2, 0, 0, 0, 3};
    const DissipativeSDE sde(A, 3, DriftKind::SinCoordwise, 0.5, {1.0, 1.0, 1.0});
    CHECK(sde.omega1() == doctest::Approx(1.0));
    CHECK(sde.omega2() == doctest::Approx(-0.5));
    const auto grid = SimGrid::uniform(10.0, 1e-3, 5.0);
    const auto [ea, eb] = coupled_pair_simulate(sde, Point{1.0, 1.0, 1.0},
                                                Point{-1.0, 0.5, 2.0}, grid, 32, 5,
                                                Integrator::ExponentialEuler);
    const auto& sp = sde.space();
    for (int p = 0; p < ea.n_paths; ++p) {
      const double d0 = sp.distance(ea.state(p, 0), eb.state(p, 0));
      const double dT = sp.distance(ea.state(p, ea.n_times() - 1),
                                    eb.state(p, ea.n_times() - 1));
      const double rate = std::log(d0 / dT) / 10.0;
      CHECK(rate >= 0.5 - 0.05);
    }
  }

  TEST_CASE("dissipative declared one-sided constant holds on samples") {
    const std::vector<double> A{1, 0, 0, 1};
    const DissipativeSDE sde({1, 0, 0, 1}, 2, DriftKind::SinCoordwise, 0.3, {1.0, 1.0});
    SplitRng rng(6);
    std::vector<double> fy(2), fz(2);
    for (int rep = 0; rep < 200; ++rep) {
      Point z{rng.next_gaussian(), rng.next_gaussian()};
      Point y{rng.next_gaussian(), rng.next_gaussian()};
      Point yz{y[0] + z[0], y[1] + z[1]};
      sde.drift_f(yz, fy);
      sde.drift_f(z, fz);
      const double ip = (fy[0] - fz[0]) * y[0] + (fy[1] - fz[1]) * y[1];
      const double y2 = y[0] * y[0] + y[1] * y[1];
      if (y2 > 1e-12) CHECK(ip / y2 <= -sde.omega2() + 1e-9);
    }
  }

  TEST_CASE("time_integral_observable: constants and noiseless decay") {
    const OUProcess ou(1.0, 0.0, 1);
    const auto grid = SimGrid::uniform(2.0, 1e-3, 1e-3);
    const auto e = simulate_ensemble(ou, Point{1.5}, grid, 1, 11,
                                     Integrator::ExponentialEuler);
    Observable constant{[](std::span<const double>) { return 2.5; }, 0.0, "c"};
    CHECK(time_integral_observable(e, constant)[0] == doctest::Approx(5.0).epsilon(1e-12));
    Observable zero{[](std::span<const double>) { return 0.0; }, 0.0, "0"};
    CHECK(time_integral_observable(e, zero)[0] == 0.0);
    // integral of 1.5 e^{-t} over [0,2]
    const double target = 1.5 * (1.0 - std::exp(-2.0));
    CHECK(time_integral_observable(e, coord0())[0] ==
          doctest::Approx(target).epsilon(1e-6));
  }

  TEST_CASE("markov restart: resumed simulation matches the direct law") {
    const OUProcess ou(1.0, 1.0, 1);
    const int n = 40000;
    const auto direct = simulate_ensemble(ou, Point{2.0}, SimGrid::uniform(2.0, 0.05, 1.0),
                                          n, 21, Integrator::ExponentialEuler);
    // restart from the time-1 states with fresh derived seeds
    const auto stage1 = simulate_ensemble(ou, Point{2.0}, SimGrid::uniform(1.0, 0.05, 1.0),
                                          n, 22, Integrator::ExponentialEuler);
    const auto st = ou.make_stepper(0.05, Integrator::ExponentialEuler);
    std::vector<double> resumed(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      Point x{stage1.state(p, 1)[0]};
      SplitRng rng = SplitRng::derive(23, "restart", static_cast<std::uint64_t>(p));
      run_path(*st, 0.05, x, 1.0, rng, nullptr, nullptr);
      resumed[static_cast<std::size_t>(p)] = x[0];
    }
    const auto direct2 = snapshot_coord(direct, 2);
    const MeanSE md = mean_se(direct2), mr = mean_se(resumed);
    CHECK(std::abs(md.mean - mr.mean) <= 4.0 * std::hypot(md.se, mr.se));
    const double vd = sample_variance(direct2), vr = sample_variance(resumed);
    CHECK(std::abs(vd - vr) <= 4.0 * vd * std::sqrt(2.0 / (n - 1.0)) * std::sqrt(2.0));
  }

  TEST_CASE("vorticity: ND validation accepts/rejects documented configs") {
    // all |p| equal: violates the two-moduli clause
    const auto bad = check_noise_nondegeneracy({{1, 0}, {0, 1}});
    CHECK_FALSE(bad.ok);
    CHECK(bad.reason.find("moduli") != std::string::npos);
    CHECK(check_noise_nondegeneracy({{1, 0}, {1, 1}}).ok);
    // does not generate Z^2
    CHECK_FALSE(check_noise_nondegeneracy({{2, 0}, {2, 2}}).ok);
    CHECK_THROWS_AS(GalerkinVorticity(4, {{1, 0}, {0, 1}}, {1.0, 1.0}, 0.05), InvalidInput);
  }

  TEST_CASE("vorticity nonlinearity conserves energy on random states") {
    const GalerkinVorticity model(4, {{1, 0}, {1, 1}}, {1.0, 1.0}, 0.05);
    SplitRng rng(17);
    std::vector<double> w(static_cast<std::size_t>(model.dim()));
    std::vector<double> b(w.size());
    for (int rep = 0; rep < 100; ++rep) {
      for (auto& v : w) v = rng.next_gaussian();
      model.nonlinearity(w, b);
      const double ip = model.field_inner(b, w);
      const double scale = std::max(1.0, std::abs(model.field_inner(w, w)));
      CHECK(std::abs(ip) / scale <= 1e-10);
    }
  }

  TEST_CASE("vorticity serial and parallel convolutions agree bitwise") {
    const GalerkinVorticity model(4, {{1, 0}, {1, 1}}, {1.0, 1.0}, 0.05);
    SplitRng rng(19);
    std::vector<double> w(static_cast<std::size_t>(model.dim()));
    for (auto& v : w) v = rng.next_gaussian();
    std::vector<double> b1(w.size()), b2(w.size());
    model.nonlinearity(w, b1);
    model.nonlinearity_serial(w, b2);
    CHECK(b1 == b2);
  }

  TEST_CASE("vorticity with frozen B: forced modes are exact OU in law") {
    // mode p: rate 4 pi^2 |p|^2, stationary E|w_p|^2 = gamma^2 / (2 lambda)
    const GalerkinVorticity lin(2, {{1, 0}, {1, 1}}, {1.0, 1.0}, 0.05, false);
    const auto grid = SimGrid::uniform(1.0, 0.01, 1.0);
    const int n = 20000;
    const auto e = simulate_ensemble(lin, Point(static_cast<std::size_t>(lin.dim()), 0.0),
                                     grid, n, 29, Integrator::ExponentialEuler);
    // locate the (1,0) half mode
    std::size_t h10 = lin.n_half_modes();
    for (std::size_t h = 0; h < lin.n_half_modes(); ++h)
      if (lin.half_mode(h) == std::array<int, 2>{1, 0}) h10 = h;
    REQUIRE(h10 < lin.n_half_modes());
    const double lambda = 4.0 * M_PI * M_PI;
    const double target = (1.0 - std::exp(-2.0 * lambda)) / (2.0 * lambda);
    std::vector<double> m2(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      const auto s = e.state(p, 1);
      m2[static_cast<std::size_t>(p)] =
          s[2 * h10] * s[2 * h10] + s[2 * h10 + 1] * s[2 * h10 + 1];
    }
    const MeanSE m = mean_se(m2);
    CHECK(std::abs(m.mean - target) <= 4.0 * m.se);
    // unforced mode stays exactly at zero
    std::size_t h20 = lin.n_half_modes();
    for (std::size_t h = 0; h < lin.n_half_modes(); ++h)
      if (lin.half_mode(h) == std::array<int, 2>{2, 0}) h20 = h;
    REQUIRE(h20 < lin.n_half_modes());
    CHECK(e.state(0, 1)[2 * h20] == 0.0);
  }

  TEST_CASE("ensembles draw initial atoms from weighted measures") {
    const OUProcess ou(1.0, 0.0, 1);
    const EmpiricalMeasure mu({-1.0, 1.0}, 1, {0.25, 0.75});
    const auto grid = SimGrid::uniform(0.1, 0.1, 0.1);
    const auto e = simulate_ensemble(ou, mu, grid, 20000, 44, Integrator::ExponentialEuler);
    int plus = 0;
    for (int p = 0; p < e.n_paths; ++p)
      if (e.state(p, 0)[0] > 0) ++plus;
    const double frac = static_cast<double>(plus) / e.n_paths;
    CHECK(std::abs(frac - 0.75) <= 4.0 * std::sqrt(0.25 * 0.75 / 20000.0));
  }
}
