// Compares the OpenMP kernels against their serial reference implementations
// and verifies bit-identity while timing both.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "wclt/process.hpp"
#include "wclt/wasserstein.hpp"

using namespace wclt;

namespace {

double time_s(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-34s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   bitwise %s\n",
              name, serial_s, parallel_s, serial_s / parallel_s,
              identical ? "identical" : "DIFFERENT");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("threads available: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel paths run serially\n");
#endif

  // ensemble simulation over paths
  {
    const OUProcess ou(1.0, 1.0, 4);
    const auto grid = SimGrid::uniform(10.0, 1e-3, 10.0);
    const Point x0{0.0, 0.0, 0.0, 0.0};
    PathEnsemble a, b;
    const double ts = time_s([&] {
      a = simulate_ensemble_serial(ou, x0, grid, 4000, 7, Integrator::ExponentialEuler);
    });
    const double tp = time_s([&] {
      b = simulate_ensemble(ou, x0, grid, 4000, 7, Integrator::ExponentialEuler);
    });
    row("ou ensemble (4000 x 10000 steps)", ts, tp, a.states == b.states);
  }

  // spectral advection convolution over output modes
  {
    const GalerkinVorticity model(12, {{1, 0}, {1, 1}}, {1.0, 1.0}, 0.05);
    std::vector<double> w(static_cast<std::size_t>(model.dim()));
    SplitRng rng(3);
    for (auto& v : w) v = rng.next_gaussian();
    std::vector<double> bs(w.size()), bp(w.size());
    const int reps = 400;
    const double ts = time_s([&] {
      for (int r = 0; r < reps; ++r) model.nonlinearity_serial(w, bs);
    });
    const double tp = time_s([&] {
      for (int r = 0; r < reps; ++r) model.nonlinearity(w, bp);
    });
    row("vorticity B(w) (K = 12, 400 evals)", ts, tp, bs == bp);
  }

  // assignment cost-matrix assembly dominates the exact W1 at this size
  {
    SplitRng rng(5);
    std::vector<Point> xs(768), ys(768);
    for (auto& p : xs) p = {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
    for (auto& p : ys) p = {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
    const auto mu = EmpiricalMeasure::from_points(xs);
    const auto nu = EmpiricalMeasure::from_points(ys);
    const auto space = MetricSpace::euclidean(3);
    double v1 = 0.0, v2 = 0.0;
#ifdef _OPENMP
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const double ts = time_s([&] { v1 = w1_assignment(mu, nu, space).value; });
    omp_set_num_threads(saved);
#else
    const double ts = time_s([&] { v1 = w1_assignment(mu, nu, space).value; });
#endif
    const double tp = time_s([&] { v2 = w1_assignment(mu, nu, space).value; });
    row("exact W1 assignment (n = 768)", ts, tp, v1 == v2);
  }
  return 0;
}
