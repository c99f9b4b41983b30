#include "wclt/martingale.hpp"

#include <algorithm>
#include <cmath>

#include "wclt/errors.hpp"
#include "wclt/stats.hpp"

namespace wclt {

namespace {

// ensemble must carry integer snapshot times 0..N with psi integrals
int integer_horizon(const PathEnsemble& ens) {
  if (!ens.has_integrals())
    throw InvalidInput("decompose: ensemble lacks accumulated psi integrals");
  const std::size_t nt = ens.n_times();
  if (nt < 2) throw InvalidInput("decompose: need at least times 0 and 1");
  for (std::size_t k = 0; k < nt; ++k)
    if (std::abs(ens.times[k] - static_cast<double>(k)) > 1e-9)
      throw InvalidInput("decompose: ensemble grid must sample integer times 0..N");
  return static_cast<int>(nt) - 1;
}

Observable centered_obs(const Observable& psi, double v_star) {
  Observable c;
  c.name = psi.name + "-centered";
  auto ev = psi.eval;
  c.eval = [ev, v_star](std::span<const double> x) { return ev(x) - v_star; };
  return c;
}

}  // namespace

MartingaleDecomposition decompose(const PathEnsemble& ens, const ChiFunction& chi,
                                  double v_star) {
  MartingaleDecomposition d;
  d.N = integer_horizon(ens);
  d.n_paths = ens.n_paths;
  const int N = d.N;
  d.M.resize(static_cast<std::size_t>(d.n_paths) * (N + 1));
  d.Z.resize(static_cast<std::size_t>(d.n_paths) * N);
  d.R_T.resize(static_cast<std::size_t>(d.n_paths));
  d.realized_qv.resize(static_cast<std::size_t>(d.n_paths) * (N + 1));
  for (int p = 0; p < d.n_paths; ++p) {
    const double chi0 = chi(ens.state(p, 0));
    double prev = 0.0;
    double qv = 0.0;
    d.M[static_cast<std::size_t>(p) * (N + 1)] = 0.0;
    d.realized_qv[static_cast<std::size_t>(p) * (N + 1)] = 0.0;
    for (int n = 1; n <= N; ++n) {
      const double integral = ens.integral(p, static_cast<std::size_t>(n)) -
                              static_cast<double>(n) * v_star;
      const double m = chi(ens.state(p, static_cast<std::size_t>(n))) - chi0 + integral;
      const double z = m - prev;
      d.M[static_cast<std::size_t>(p) * (N + 1) + n] = m;
      d.Z[static_cast<std::size_t>(p) * N + (n - 1)] = z;
      qv += z * z;
      d.realized_qv[static_cast<std::size_t>(p) * (N + 1) + n] = qv;
      prev = m;
    }
    d.R_T[static_cast<std::size_t>(p)] =
        (chi0 - chi(ens.state(p, static_cast<std::size_t>(N)))) / std::sqrt(static_cast<double>(N));
  }
  return d;
}

MartingaleTestReport martingale_test(const ProcessModel& model, const PathEnsemble& ens,
                                     const ChiFunction& chi, const Observable& psi,
                                     double v_star, int n_inner, int max_states,
                                     std::uint64_t seed, double dt, Integrator integ) {
  const int N = integer_horizon(ens);
  const double dtv = dt > 0 ? dt : model.default_dt();
  const auto st = model.make_stepper(dtv, integ);
  const Observable centered = centered_obs(psi, v_star);

  // deterministic subsample over (path, time): paths by stride, times by a
  // hash so the selection never aliases with the horizon
  struct Sel {
    int p, n;
  };
  std::vector<Sel> sel;
  const std::size_t want = std::min<std::size_t>(
      static_cast<std::size_t>(std::max(1, max_states)),
      static_cast<std::size_t>(ens.n_paths) * static_cast<std::size_t>(N));
  for (std::size_t k = 0; k < want; ++k) {
    const int p = static_cast<int>((k * static_cast<std::size_t>(ens.n_paths)) / want);
    std::uint64_t h = k;
    const int n = static_cast<int>(splitmix64_next(h) % static_cast<std::uint64_t>(N));
    sel.push_back({p, n});
  }

  MartingaleTestReport rep;
  rep.states_tested = sel.size();
  std::vector<double> zscores(sel.size(), 0.0);
  const auto n_sel = static_cast<int>(sel.size());
#pragma omp parallel for schedule(static)
  for (int s = 0; s < n_sel; ++s) {
    const auto [p, n] = sel[static_cast<std::size_t>(s)];
    const auto x0 = ens.state(p, static_cast<std::size_t>(n));
    const double chi0 = chi(x0);
    std::vector<double> ms(static_cast<std::size_t>(n_inner));
    Point x(x0.begin(), x0.end());
    for (int r = 0; r < n_inner; ++r) {
      SplitRng rng = SplitRng::derive(seed, "mtest", static_cast<std::uint64_t>(s),
                                      static_cast<std::uint64_t>(r));
      std::copy(x0.begin(), x0.end(), x.begin());
      double acc = 0.0;
      run_path(*st, dtv, x, 1.0, rng, &centered, &acc);
      ms[static_cast<std::size_t>(r)] = chi(x) - chi0 + acc;
    }
    const MeanSE m = mean_se(ms);
    zscores[static_cast<std::size_t>(s)] = m.se > 0 ? std::abs(m.mean) / m.se : 0.0;
  }
  for (double z : zscores) {
    rep.max_abs_z = std::max(rep.max_abs_z, z);
    if (z > 4.0) ++rep.states_failed;
  }
  rep.pass_rate = 1.0 - static_cast<double>(rep.states_failed) /
                            static_cast<double>(std::max<std::size_t>(1, rep.states_tested));
  rep.pass = rep.pass_rate >= 0.99;
  return rep;
}

LindebergReport lindeberg_m1(const MartingaleDecomposition& d, double epsilon,
                             const std::vector<int>& n_list) {
  if (!(epsilon > 0)) throw InvalidInput("lindeberg_m1: epsilon must be positive");
  LindebergReport rep;
  rep.epsilon = epsilon;
  rep.n_list = n_list;
  double z2_mean = 0.0;
  std::vector<double> per_path(static_cast<std::size_t>(d.n_paths));
  for (int N : n_list) {
    if (N < 1 || N > d.N) throw InvalidInput("lindeberg_m1: N outside decomposition horizon");
    const double cut = epsilon * std::sqrt(static_cast<double>(N));
    for (int p = 0; p < d.n_paths; ++p) {
      double s = 0.0;
      for (int n = 0; n < N; ++n) {
        const double z = d.z_at(p, n);
        if (std::abs(z) >= cut) s += z * z;
      }
      per_path[static_cast<std::size_t>(p)] = s / static_cast<double>(N);
    }
    const MeanSE m = mean_se(per_path);
    rep.values.push_back(m.mean);
    rep.halfwidths.push_back(4.0 * m.se);
  }
  // tolerance relative to the realized increment variance
  for (int p = 0; p < d.n_paths; ++p)
    z2_mean += d.realized_qv[static_cast<std::size_t>(p) * (d.N + 1) + d.N];
  z2_mean /= static_cast<double>(d.n_paths) * static_cast<double>(d.N);
  rep.tolerance = 0.02 * z2_mean;
  // the halfwidth stays reported but does not loosen the threshold: heavy
  // tails inflate both the statistic and its SE together
  bool decreasing = rep.values.size() < 2 || rep.values.back() <= rep.values.front() + 1e-12;
  rep.pass = decreasing && rep.values.back() <= rep.tolerance;
  return rep;
}

BlockVarianceReport block_variance_m2(const ProcessModel& model, const PathEnsemble& ens,
                                      const MartingaleDecomposition& d,
                                      const ChiFunction& chi, const Observable& psi,
                                      double v_star, const BlockScheme& scheme,
                                      double sigma2_ref, std::uint64_t seed, double dt,
                                      Integrator integ) {
  const int N = d.N;
  const double dtv = dt > 0 ? dt : model.default_dt();
  const auto st = model.make_stepper(dtv, integ);
  const Observable centered = centered_obs(psi, v_star);

  BlockVarianceReport rep;
  rep.sigma2_ref = sigma2_ref;
  const int paths_sub = std::min(scheme.paths_sub, d.n_paths);

  // uniform bound on the increment second moments: sup_n mean Z_n^2
  for (int n = 0; n < N; ++n) {
    double s = 0.0;
    for (int p = 0; p < d.n_paths; ++p) {
      const double z = d.z_at(p, n);
      s += z * z;
    }
    rep.sup_z2 = std::max(rep.sup_z2, s / d.n_paths);
  }

  double z2_mean = 0.0;
  for (int p = 0; p < d.n_paths; ++p)
    z2_mean += d.realized_qv[static_cast<std::size_t>(p) * (N + 1) + N];
  z2_mean /= static_cast<double>(d.n_paths) * static_cast<double>(N);

  double se_worst = 0.0;
  for (int K : scheme.k_list) {
    if (K < 1 || K > N) throw InvalidInput("block_variance_m2: K outside horizon");
    const int ell = N / K;
    std::vector<double> devs;
    devs.reserve(static_cast<std::size_t>(paths_sub) * static_cast<std::size_t>(ell));
    std::vector<double> inner_means(static_cast<std::size_t>(paths_sub) * static_cast<std::size_t>(ell), 0.0);
    const int jobs = paths_sub * ell;
#pragma omp parallel for schedule(static)
    for (int job = 0; job < jobs; ++job) {
      const int pi = job / ell;
      const int m = job % ell;
      const int p = pi * (d.n_paths / paths_sub);
      const auto x0 = ens.state(p, static_cast<std::size_t>(m * K));
      double acc_qv = 0.0;
      Point x(x0.begin(), x0.end());
      for (int r = 0; r < scheme.n_inner; ++r) {
        SplitRng rng = SplitRng::derive(seed, "m2", static_cast<std::uint64_t>(job),
                                        static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(K));
        std::copy(x0.begin(), x0.end(), x.begin());
        const double chi_start = chi(x);
        double m_prev = 0.0, integral = 0.0, qv = 0.0;
        for (int j = 1; j <= K; ++j) {
          run_path(*st, dtv, x, 1.0, rng, &centered, &integral);
          // M relative to the block start; integral is cumulative
          const double mj = chi(x) - chi_start + integral;
          const double z = mj - m_prev;
          qv += z * z;
          m_prev = mj;
        }
        acc_qv += qv;
      }
      inner_means[static_cast<std::size_t>(job)] = acc_qv / scheme.n_inner / K;
    }
    double val = 0.0;
    for (double im : inner_means) val += std::abs(im - sigma2_ref);
    val /= static_cast<double>(jobs);
    rep.k_list.push_back(K);
    rep.values.push_back(val);
    // nested-MC noise floor of the K-block average (reported, spec open question)
    const double se = std::sqrt(2.0 * z2_mean * z2_mean /
                                std::max(1.0, static_cast<double>(scheme.n_inner) * K));
    rep.nested_se.push_back(se);
    se_worst = std::max(se_worst, se);
  }
  rep.tolerance = 0.15 * std::max(z2_mean, 1e-12) + 3.0 * se_worst;
  const bool decreasing = rep.values.back() <= rep.values.front() * 1.05 + 1e-12;
  rep.pass = decreasing && rep.values.back() <= rep.tolerance;
  return rep;
}

namespace {

// M3 statistic at block length K using the first ell blocks
double m3_statistic(const MartingaleDecomposition& d, int K, int ell, double epsilon) {
  const double cut = epsilon * std::sqrt(static_cast<double>(ell) * K);
  double total = 0.0;
  for (int p = 0; p < d.n_paths; ++p) {
    double s = 0.0;
    for (int m = 0; m < ell; ++m) {
      const double m_start = d.m_at(p, m * K);
      for (int j = m * K; j < (m + 1) * K; ++j) {
        if (std::abs(d.m_at(p, j) - m_start) >= cut) {
          const double z = d.z_at(p, j);
          s += 1.0 + z * z;
        }
      }
    }
    total += s / (static_cast<double>(ell) * K);
  }
  return total / d.n_paths;
}

}  // namespace

OvershootReport block_overshoot_m3(const MartingaleDecomposition& d,
                                   const std::vector<int>& k_list, double epsilon) {
  if (!(epsilon > 0)) throw InvalidInput("block_overshoot_m3: epsilon must be positive");
  OvershootReport rep;
  rep.epsilon = epsilon;
  const int N = d.N;
  double z2_mean = 0.0;
  for (int p = 0; p < d.n_paths; ++p)
    z2_mean += d.realized_qv[static_cast<std::size_t>(p) * (N + 1) + N];
  z2_mean /= static_cast<double>(d.n_paths) * static_cast<double>(N);
  rep.tolerance = 0.02 * (1.0 + z2_mean);

  // the condition is a limit in ell at fixed K: compare the statistic at the
  // full block count against half as many blocks and require decay (the
  // threshold epsilon sqrt(ell K) grows with ell)
  rep.pass = true;
  for (int K : k_list) {
    if (K < 1 || K > N) throw InvalidInput("block_overshoot_m3: K outside horizon");
    const int ell = N / K;
    const int ell_half = std::max(1, ell / 2);
    const double full = m3_statistic(d, K, ell, epsilon);
    const double half = ell_half < ell ? m3_statistic(d, K, ell_half, epsilon) : full;
    rep.k_list.push_back(K);
    rep.values.push_back(full);
    const bool ok = full <= rep.tolerance || full <= 0.75 * half + rep.tolerance;
    rep.pass = rep.pass && ok;
  }
  return rep;
}

CharFnReport char_fn_gap(const MartingaleDecomposition& d,
                         const std::vector<double>& theta_grid, double sigma,
                         double threshold) {
  CharFnReport rep;
  rep.theta_grid = theta_grid;
  rep.sigma = sigma;
  rep.threshold = threshold;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d.N));
  for (double theta : theta_grid) {
    double re = 0.0, im = 0.0;
    for (int p = 0; p < d.n_paths; ++p) {
      const double a = theta * d.m_at(p, d.N) * scale;
      re += std::cos(a);
      im += std::sin(a);
    }
    re /= d.n_paths;
    im /= d.n_paths;
    const double target = std::exp(-0.5 * sigma * sigma * theta * theta);
    const double gap = std::hypot(re - target, im);
    rep.gaps.push_back(gap);
    rep.sup_gap = std::max(rep.sup_gap, gap);
  }
  rep.pass = rep.sup_gap < threshold;
  return rep;
}

std::complex<double> remainder_R(double a) {
  if (a == 0.0) return {0.0, 0.0};
  if (std::abs(a) < 1e-4) {
    // Taylor: R(a) = i a/6 - a^2/24 - i a^3/120 + ... avoids cancellation
    const double a2 = a * a;
    return {-a2 / 24.0 + a2 * a2 / 720.0, a / 6.0 - a2 * a / 120.0};
  }
  const std::complex<double> eia(std::cos(a), std::sin(a));
  const std::complex<double> num =
      std::complex<double>(1.0 - a * a / 2.0, a) - eia;
  return num / (a * a);
}

RemainderL1Report remainder_l1_check(const PathEnsemble& ens, const ChiFunction& chi,
                                     const std::vector<double>& t_list) {
  RemainderL1Report rep;
  rep.t_list = t_list;
  for (double t : t_list) {
    std::size_t k = ens.n_times();
    for (std::size_t q = 0; q < ens.n_times(); ++q)
      if (std::abs(ens.times[q] - t) < 1e-9) {
        k = q;
        break;
      }
    if (k == ens.n_times())
      throw InvalidInput("remainder_l1_check: horizon " + std::to_string(t) +
                         " is not an ensemble snapshot");
    double s = 0.0;
    for (int p = 0; p < ens.n_paths; ++p)
      s += std::abs(chi(ens.state(p, 0)) - chi(ens.state(p, k))) / std::sqrt(t);
    rep.mean_abs_r.push_back(s / ens.n_paths);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    if (rep.mean_abs_r[i] > 0) {
      lx.push_back(std::log(t_list[i]));
      ly.push_back(std::log(rep.mean_abs_r[i]));
    }
  }
  if (lx.size() >= 2) {
    rep.fitted_exponent = -least_squares_line(lx, ly).slope;
    rep.pass = rep.fitted_exponent >= 0.35 && rep.fitted_exponent <= 0.65;
  } else {
    // identically zero remainder (chi == 0) passes trivially
    rep.pass = *std::max_element(rep.mean_abs_r.begin(), rep.mean_abs_r.end()) == 0.0;
    rep.fitted_exponent = 0.5;
  }
  return rep;
}

double increment_covariance(const MartingaleDecomposition& d, int m, int n) {
  std::vector<double> a(static_cast<std::size_t>(d.n_paths)), b(static_cast<std::size_t>(d.n_paths));
  for (int p = 0; p < d.n_paths; ++p) {
    a[static_cast<std::size_t>(p)] = d.z_at(p, m);
    b[static_cast<std::size_t>(p)] = d.z_at(p, n);
  }
  const double ma = mean_se(a).mean, mb = mean_se(b).mean;
  double s = 0.0;
  for (int p = 0; p < d.n_paths; ++p)
    s += (a[static_cast<std::size_t>(p)] - ma) * (b[static_cast<std::size_t>(p)] - mb);
  return s / std::max(1, d.n_paths - 1);
}

}  // namespace wclt
