#include "wclt/hypotheses.hpp"

#include <algorithm>
#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/stats.hpp"
#include "wclt/wasserstein.hpp"

namespace wclt {

namespace {

double pick_dt(const ProcessModel& model, double dt) {
  return dt > 0 ? dt : model.default_dt();
}

std::vector<double> coords_1d(const EmpiricalMeasure& m) {
  std::vector<double> out(m.n_atoms());
  for (std::size_t i = 0; i < m.n_atoms(); ++i) out[i] = m.atom(i)[0];
  return out;
}

// deterministic stride subsample to exactly m atoms
EmpiricalMeasure subsample(const EmpiricalMeasure& m, std::size_t target) {
  if (m.n_atoms() <= target) return m;
  std::vector<Point> pts;
  pts.reserve(target);
  for (std::size_t i = 0; i < target; ++i) {
    const std::size_t j = (i * m.n_atoms()) / target;
    const auto a = m.atom(j);
    pts.emplace_back(a.begin(), a.end());
  }
  return EmpiricalMeasure::from_points(pts);
}

}  // namespace

EmpiricalD1 empirical_d1(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         const MetricSpace& space, std::uint64_t seed) {
  EmpiricalD1 out;
  if (space.kind() == MetricKind::DiscreteTable) {
    const auto r = w1_finite_lp(a, b, space);
    out.value = r.value;
    out.method = to_string(r.method);
    return out;
  }
  if (a.dim() == 1 && space.kind() == MetricKind::EuclideanNorm) {
    const auto r = w1_sorted_1d(coords_1d(a), coords_1d(b));
    out.value = r.value;
    out.method = to_string(r.method);
    return out;
  }
  if (a.dim() <= 3 && a.n_atoms() <= kAssignmentMaxN) {
    const auto r = w1_assignment(a, b, space);
    out.value = r.value;
    out.method = to_string(r.method);
    return out;
  }
  const auto r = w1_sliced(a, b, 64, seed);
  out.value = r.value;
  out.method = to_string(r.method);
  out.is_exact = false;
  return out;
}

ContractionFit contraction_fit(const ProcessModel& model, const Initial& mu,
                               const Initial& nu, const std::vector<double>& times,
                               int n_samples, std::uint64_t seed,
                               const ContractionFitOptions& opts) {
  if (times.empty()) throw InvalidInput("contraction_fit: empty time grid");
  if (n_samples < 100) throw InvalidInput("contraction_fit: need n_samples >= 100");
  const SimGrid grid = make_grid(model, times, opts.dt);

  ContractionFit fit;
  fit.coupled = opts.coupled;
  fit.times = grid.snapshot_times;

  PathEnsemble ea, eb;
  if (opts.coupled) {
    if (!std::holds_alternative<Point>(mu) || !std::holds_alternative<Point>(nu))
      throw InvalidInput("contraction_fit: synchronous coupling needs point initials");
    auto pair = coupled_pair_simulate(model, std::get<Point>(mu), std::get<Point>(nu),
                                      grid, n_samples, seed, opts.integrator);
    ea = std::move(pair.first);
    eb = std::move(pair.second);
  } else {
    SimulateOptions so;
    so.stream_tag = "fit-mu";
    ea = simulate_ensemble(model, mu, grid, n_samples, seed, opts.integrator, so);
    so.stream_tag = "fit-nu";
    eb = simulate_ensemble(model, nu, grid, n_samples, seed, opts.integrator, so);
  }

  // noise floor: median over times of d1 between two independent mu-law copies
  SimulateOptions fo;
  fo.stream_tag = "floor-a";
  const PathEnsemble fa = simulate_ensemble(model, mu, grid, n_samples, seed, opts.integrator, fo);
  fo.stream_tag = "floor-b";
  const PathEnsemble fb = simulate_ensemble(model, mu, grid, n_samples, seed, opts.integrator, fo);

  const std::size_t nt = fit.times.size();
  fit.measured_d1.resize(nt);
  std::vector<double> floors(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    const auto d = empirical_d1(ea.snapshot_measure(k), eb.snapshot_measure(k),
                                model.space(), seed + k);
    fit.measured_d1[k] = d.value;
    if (k == 0) fit.w1_method = d.method;
    floors[k] = empirical_d1(fa.snapshot_measure(k), fb.snapshot_measure(k),
                             model.space(), seed + 31 * k)
                    .value;
  }
  std::vector<double> sorted_floors = floors;
  std::sort(sorted_floors.begin(), sorted_floors.end());
  fit.noise_floor = sorted_floors[sorted_floors.size() / 2];

  ContractionFit fitted =
      fit_contraction_curve(fit.times, fit.measured_d1, fit.noise_floor, opts.floor_factor);
  fitted.coupled = fit.coupled;
  fitted.w1_method = fit.w1_method;
  auto describe = [](const Initial& init) {
    if (std::holds_alternative<EmpiricalMeasure>(init)) {
      const auto& m = std::get<EmpiricalMeasure>(init);
      return "measure[" + std::to_string(m.n_atoms()) + " atoms]";
    }
    std::string out = "point(";
    const auto& p = std::get<Point>(init);
    for (std::size_t k = 0; k < p.size(); ++k)
      out += (k ? "," : "") + std::to_string(p[k]);
    return out + ")";
  };
  fitted.pair_spec = describe(mu) + " vs " + describe(nu);
  return fitted;
}

ContractionFit fit_contraction_curve(const std::vector<double>& times,
                                     const std::vector<double>& d1, double noise_floor,
                                     double floor_factor) {
  if (times.size() != d1.size() || times.empty() || times.front() != 0.0)
    throw InvalidInput("fit_contraction_curve: need matched curves starting at t = 0");
  ContractionFit fit;
  fit.times = times;
  fit.measured_d1 = d1;
  fit.noise_floor = noise_floor;

  const double d0 = d1.front();
  if (!(d0 > floor_factor * noise_floor) || !(d0 > 0))
    throw CheckFailure("contraction-fit",
                       "initial laws indistinguishable: d1(0) = " + std::to_string(d0) +
                           " at noise floor " + std::to_string(noise_floor) +
                           "; fit refused");

  // fit window: drop times once the signal hits the noise floor
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double d = d1[k];
    if (!(d > floor_factor * noise_floor) || !(d > 0)) {
      fit.truncated = true;
      break;
    }
    ts.push_back(times[k]);
    ys.push_back(std::log(d / d0));
  }
  if (fit.truncated)
    fit.warning = "d1 reached the empirical noise floor; fit window truncated to t <= " +
                  std::to_string(ts.empty() ? 0.0 : ts.back());
  if (ts.size() < 3)
    throw CheckFailure("contraction-fit",
                       "fewer than 3 usable fit times above the noise floor");
  fit.fit_points = ts.size();

  const LineFit lf = least_squares_line(ts, ys);
  fit.gamma_hat = -lf.slope;
  fit.ls_c_hat = std::exp(lf.intercept);
  fit.residual_max = lf.residual_max;
  if (!(fit.gamma_hat > 0))
    throw CheckFailure("contraction-fit", "fitted contraction rate is not positive (gamma_hat = " +
                                              std::to_string(fit.gamma_hat) + ")");
  // one-sided upper-envelope correction: H1 is a bound, not a regression line
  double log_c = -1e300;
  for (std::size_t i = 0; i < ts.size(); ++i)
    log_c = std::max(log_c, ys[i] + fit.gamma_hat * ts[i]);
  fit.c_hat = std::max(std::exp(log_c), 1e-12);
  return fit;
}

namespace {

MomentReport moment_over_times(const ProcessModel& model, const Initial& mu0, double delta,
                               const std::vector<double>& times, int n_samples,
                               std::uint64_t seed, double dt, Integrator integ,
                               const std::string& tag) {
  if (!(delta > 0)) throw InvalidInput("moment report: delta must be positive");
  const SimGrid grid = make_grid(model, times, dt);
  SimulateOptions so;
  so.stream_tag = tag;
  const PathEnsemble e = simulate_ensemble(model, mu0, grid, n_samples, seed, integ, so);
  MomentReport rep;
  rep.delta = delta;
  rep.times = grid.snapshot_times;
  const double p = 2.0 + delta;
  std::vector<double> vals(static_cast<std::size_t>(e.n_paths));
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    for (int q = 0; q < e.n_paths; ++q)
      vals[static_cast<std::size_t>(q)] =
          std::pow(model.space().distance_to_reference(e.state(q, k)), p);
    const MeanSE m = mean_se(vals);
    rep.values.push_back(m.mean);
    rep.halfwidths.push_back(4.0 * m.se);
  }
  rep.sup_estimate = *std::max_element(rep.values.begin(), rep.values.end());
  // crude divergence heuristic: still climbing at the end and far above the
  // typical level (the median; a zero start alone must not trip it)
  if (rep.values.size() >= 3) {
    std::vector<double> sorted = rep.values;
    std::sort(sorted.begin(), sorted.end());
    const double median = std::max(sorted[sorted.size() / 2], 1e-12);
    const bool increasing_tail =
        rep.values.back() > rep.values[rep.values.size() - 2] &&
        rep.values[rep.values.size() - 2] > rep.values[rep.values.size() - 3];
    if (rep.values.back() > 10.0 * median && increasing_tail) rep.divergence_suspect = true;
  }
  return rep;
}

// Halton sequence in [0,1]
double halton(std::size_t i, int base) {
  double f = 1.0, r = 0.0;
  auto n = i + 1;
  while (n > 0) {
    f /= base;
    r += f * static_cast<double>(n % static_cast<std::size_t>(base));
    n /= static_cast<std::size_t>(base);
  }
  return r;
}

}  // namespace

MomentReport lyapunov_report(const ProcessModel& model, const Initial& mu0, double delta,
                             const std::vector<double>& times, int n_samples,
                             std::uint64_t seed, double dt, Integrator integ) {
  return moment_over_times(model, mu0, delta, times, n_samples, seed, dt, integ, "lyapunov");
}

MomentReport local_moment_report(const ProcessModel& model, const Point& x0, double radius,
                                 double delta, double t_end, int grid_points_on_ball,
                                 int n_samples, std::uint64_t seed, double dt,
                                 Integrator integ) {
  if (radius < 0) throw InvalidInput("local_moment_report: radius must be >= 0");
  const int dim = model.dim();
  // Halton points in the cube, kept when inside the ball; center first.
  std::vector<Point> starts{x0};
  static const int bases[] = {2, 3, 5, 7, 11, 13};
  std::size_t i = 0;
  while (static_cast<int>(starts.size()) < std::max(1, grid_points_on_ball) && radius > 0) {
    Point p(x0);
    double norm2 = 0.0;
    for (int d = 0; d < dim; ++d) {
      const double u = 2.0 * halton(i, bases[d % 6]) - 1.0;
      p[static_cast<std::size_t>(d)] += radius * u;
      norm2 += u * u;
    }
    ++i;
    if (norm2 <= 1.0) starts.push_back(std::move(p));
    if (i > 64 * static_cast<std::size_t>(std::max(1, grid_points_on_ball))) break;
  }
  const std::vector<double> times =
      model.is_jump_process() ? aligned_times(t_end, 6, t_end / 6.0)
                              : aligned_times(t_end, 6, pick_dt(model, dt));
  MomentReport agg;
  agg.delta = delta;
  agg.ball_radius = radius;
  bool first = true;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    MomentReport r = moment_over_times(model, starts[s], delta, times, n_samples,
                                       seed + s, dt, integ, "local-moment");
    if (first) {
      agg = r;
      agg.ball_radius = radius;
      first = false;
    } else {
      for (std::size_t k = 0; k < agg.values.size(); ++k) {
        if (r.values[k] > agg.values[k]) {
          agg.values[k] = r.values[k];
          agg.halfwidths[k] = r.halfwidths[k];
        }
      }
      agg.sup_estimate = std::max(agg.sup_estimate, r.sup_estimate);
      agg.divergence_suspect = agg.divergence_suspect || r.divergence_suspect;
    }
  }
  return agg;
}

ContinuityReport stochastic_continuity_check(const ProcessModel& model, const Point& x,
                                             std::vector<double> small_times, int n_samples,
                                             std::uint64_t seed, double dt, Integrator integ) {
  std::sort(small_times.begin(), small_times.end());
  ContinuityReport rep;
  const double dtv = std::min(pick_dt(model, dt),
                              small_times.front() > 0 ? small_times.front() : pick_dt(model, dt));
  const SimGrid grid = make_grid(model, small_times, dtv);
  SimulateOptions so;
  so.stream_tag = "continuity";
  const PathEnsemble e = simulate_ensemble(model, x, grid, n_samples, seed, integ, so);
  rep.times = grid.snapshot_times;
  std::vector<double> dists(static_cast<std::size_t>(e.n_paths));
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    // d1 against a point mass is exactly the mean distance
    for (int p = 0; p < e.n_paths; ++p)
      dists[static_cast<std::size_t>(p)] = model.space().distance(e.state(p, k), x);
    const MeanSE m = mean_se(dists);
    rep.d1_values.push_back(m.mean);
    rep.halfwidths.push_back(4.0 * m.se);
  }
  // pass: decreasing toward 0 as t -> 0+, first value at/below the Monte
  // Carlo resolution or a small fraction of the large-t value
  const double v_small = rep.times.front() == 0.0 && rep.d1_values.size() > 1
                             ? rep.d1_values[1]
                             : rep.d1_values.front();
  const double hw_small = rep.times.front() == 0.0 && rep.halfwidths.size() > 1
                              ? rep.halfwidths[1]
                              : rep.halfwidths.front();
  const double v_big = rep.d1_values.back();
  bool trend = true;
  for (std::size_t k = 1; k < rep.d1_values.size(); ++k)
    if (rep.d1_values[k] < rep.d1_values[k - 1] * 0.8 - rep.halfwidths[k]) trend = false;
  rep.pass = trend && (v_small <= 0.25 * v_big + hw_small);
  return rep;
}

CesaroReport cesaro_contraction_check(const ProcessModel& model, const Initial& mu,
                                      const std::vector<double>& times, int n_samples,
                                      std::uint64_t seed, const ContractionFit& fit,
                                      const EmpiricalMeasure& mu_star_standin,
                                      double standin_floor, double dt, Integrator integ) {
  if (times.empty()) throw InvalidInput("cesaro_contraction_check: empty time grid");
  const double t_max = times.back();
  const int n_sub = 32;  // sub-grid resolution of the time average
  const std::vector<double> sub =
      model.is_jump_process() ? aligned_times(t_max, n_sub, t_max / n_sub)
                              : aligned_times(t_max, n_sub, pick_dt(model, dt));
  const SimGrid grid = make_grid(model, sub, dt);
  SimulateOptions so;
  so.stream_tag = "cesaro";
  const PathEnsemble e = simulate_ensemble(model, mu, grid, n_samples, seed, integ, so);

  CesaroReport rep;
  const EmpiricalMeasure mu0_cloud = e.snapshot_measure(0);
  const std::size_t cap0 = std::min<std::size_t>(
      {1024, mu0_cloud.n_atoms(), mu_star_standin.n_atoms()});
  rep.d1_mu_mustar = empirical_d1(subsample(mu0_cloud, cap0),
                                  subsample(mu_star_standin, cap0), model.space(), seed)
                         .value;

  // sup over t of the mean distance to the reference point; its ratio to
  // rho(x, x0) + 1 certifies linear-in-start growth
  const bool point_start = std::holds_alternative<Point>(mu);
  double rho_x = 1.0;
  if (point_start)
    rho_x = model.space().distance_to_reference(std::get<Point>(mu));
  std::vector<double> dists(static_cast<std::size_t>(e.n_paths));
  for (std::size_t k = 0; k < grid.snapshot_times.size(); ++k) {
    for (int p = 0; p < e.n_paths; ++p)
      dists[static_cast<std::size_t>(p)] =
          model.space().distance_to_reference(e.state(p, k));
    rep.sup_mean_rho = std::max(rep.sup_mean_rho, mean_se(dists).mean);
  }
  rep.fitted_C = rep.sup_mean_rho / (rho_x + 1.0);

  const std::size_t cap = 1024;
  rep.pass = true;
  for (double t : times) {
    if (!(t > 0)) continue;
    // pool snapshots s <= t into the empirical Cesaro average
    std::vector<Point> pool;
    for (std::size_t k = 0; k < grid.snapshot_times.size(); ++k) {
      if (grid.snapshot_times[k] > t * (1 + 1e-12)) break;
      // stride over paths to keep the pool balanced
      const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(e.n_paths) *
                                                              grid.snapshot_times.size() / (4 * cap));
      for (std::size_t p = 0; p < static_cast<std::size_t>(e.n_paths); p += stride) {
        const auto s = e.state(static_cast<int>(p), k);
        pool.emplace_back(s.begin(), s.end());
      }
    }
    const EmpiricalMeasure pooled = EmpiricalMeasure::from_points(pool);
    const std::size_t m = std::min<std::size_t>(
        {cap, pooled.n_atoms(), mu_star_standin.n_atoms()});
    const EmpiricalMeasure qt = subsample(pooled, m);
    const EmpiricalMeasure target = subsample(mu_star_standin, m);
    const double lhs = empirical_d1(qt, target, model.space(), seed + 7).value;
    const double rhs = (fit.c_hat / (t * fit.gamma_hat)) *
                           (1.0 - std::exp(-fit.gamma_hat * t)) * rep.d1_mu_mustar +
                       2.0 * standin_floor;
    rep.times.push_back(t);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(rhs);
    const bool ok = lhs <= rhs * 1.05 + 2.0 * standin_floor;
    rep.bound_ok.push_back(ok);
    rep.pass = rep.pass && ok;
  }
  return rep;
}

LipschitzDecayReport semigroup_lipschitz_decay(const ProcessModel& model,
                                               const Observable& psi,
                                               const std::vector<Point>& xs,
                                               const std::vector<double>& times,
                                               int n_samples, std::uint64_t seed,
                                               double dt, Integrator integ) {
  if (xs.size() < 2)
    throw InvalidInput("semigroup_lipschitz_decay: need >= 2 sample points");
  const SimGrid grid = make_grid(model, times, dt);
  // common random numbers across starting points: same stream tag
  std::vector<PathEnsemble> runs;
  runs.reserve(xs.size());
  SimulateOptions so;
  so.stream_tag = "lip-decay";
  for (const auto& x : xs)
    runs.push_back(simulate_ensemble(model, x, grid, n_samples, seed, integ, so));

  LipschitzDecayReport rep;
  rep.times = grid.snapshot_times;
  std::vector<double> means(xs.size());
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      double s = 0.0;
      for (int p = 0; p < runs[i].n_paths; ++p) s += psi(runs[i].state(p, k));
      means[i] = s / runs[i].n_paths;
    }
    double q = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        const double d = model.space().distance(xs[i], xs[j]);
        if (d > 0) q = std::max(q, std::abs(means[i] - means[j]) / d);
      }
    rep.quotients.push_back(q);
  }
  std::vector<double> ts, ys;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    if (rep.quotients[k] > 1e-12) {
      ts.push_back(rep.times[k]);
      ys.push_back(std::log(rep.quotients[k]));
    }
  }
  if (ts.size() >= 2) rep.fitted_exponent = -least_squares_line(ts, ys).slope;
  return rep;
}

}  // namespace wclt
