#include "wclt/harness.hpp"

#include <algorithm>
#include <cmath>

#include "wclt/errors.hpp"

namespace wclt {

namespace {

double pick_dt(const ProcessModel& model, double dt) {
  return dt > 0 ? dt : model.default_dt();
}

std::size_t snapshot_index(const PathEnsemble& ens, double t) {
  for (std::size_t k = 0; k < ens.n_times(); ++k)
    if (std::abs(ens.times[k] - t) < 1e-9 * std::max(1.0, t)) return k;
  throw InvalidInput("horizon " + std::to_string(t) + " is not an ensemble snapshot");
}

Observable centered_obs(const Observable& psi, double v_star) {
  Observable c;
  c.name = psi.name + "-centered";
  auto ev = psi.eval;
  c.eval = [ev, v_star](std::span<const double> x) { return ev(x) - v_star; };
  return c;
}

}  // namespace

StationaryEnsembleResult build_stationary_ensemble(const ProcessModel& model,
                                                   const ContractionFit& fit,
                                                   const Initial& mu0, int n_total,
                                                   double tol, std::uint64_t seed,
                                                   double dt, Integrator integ) {
  if (!(fit.gamma_hat > 0))
    throw InvalidInput("build_stationary_ensemble: needs a positive contraction rate");
  if (n_total < 8) throw InvalidInput("build_stationary_ensemble: n_total too small");
  const double dtv = pick_dt(model, dt);
  const double gamma = fit.gamma_hat;

  // pilot run for d1(mu0, mu*)
  const double t_pilot = std::ceil(std::max(10.0 / gamma, 1.0) / dtv) * dtv;
  const int n_pilot = std::min(n_total, 512);
  SimulateOptions so;
  so.stream_tag = "stationary-pilot";
  const SimGrid pgrid = make_grid(model, {t_pilot}, dtv);
  const PathEnsemble pilot = simulate_ensemble(model, mu0, pgrid, n_pilot, seed, integ, so);
  const double d0 = empirical_d1(pilot.snapshot_measure(0), pilot.snapshot_measure(1),
                                 model.space(), seed)
                        .value;

  // burn-in from the exponential mixing bound, thinning at 5 relaxation times
  const double t_burn =
      std::ceil(std::max(std::log(std::max(d0, tol) / tol) / gamma, 1.0 / gamma) / dtv) * dtv;
  const double spacing = std::ceil(5.0 / gamma / dtv) * dtv;

  const int n_half = n_total / 2;
  std::vector<double> path_times(static_cast<std::size_t>(n_half));
  for (int k = 0; k < n_half; ++k)
    path_times[static_cast<std::size_t>(k)] = t_burn + spacing * k;
  so.stream_tag = "stationary-path";
  const PathEnsemble long_path =
      simulate_ensemble(model, mu0, make_grid(model, path_times, dtv), 1, seed, integ, so);
  so.stream_tag = "stationary-replicas";
  const PathEnsemble replicas =
      simulate_ensemble(model, mu0, make_grid(model, {t_burn}, dtv),
                        n_total - n_half, seed, integ, so);

  std::vector<Point> atoms;
  atoms.reserve(static_cast<std::size_t>(n_total));
  for (std::size_t k = 1; k < long_path.n_times(); ++k) {
    const auto s = long_path.state(0, k);
    atoms.emplace_back(s.begin(), s.end());
  }
  for (int p = 0; p < replicas.n_paths; ++p) {
    const auto s = replicas.state(p, 1);
    atoms.emplace_back(s.begin(), s.end());
  }
  // interleave halves so stride subsampling mixes both sources
  StationaryEnsembleResult out{EmpiricalMeasure::from_points(atoms), 0.0, t_burn};

  // noise floor: d1 between the two pooled halves (same law)
  std::vector<Point> a_half, b_half;
  for (std::size_t i = 0; i < atoms.size(); ++i)
    (i % 2 == 0 ? a_half : b_half).push_back(atoms[i]);
  if (a_half.size() > 4 && b_half.size() > 4) {
    const auto na = std::min(a_half.size(), b_half.size());
    a_half.resize(na);
    b_half.resize(na);
    out.noise_floor = empirical_d1(EmpiricalMeasure::from_points(a_half),
                                   EmpiricalMeasure::from_points(b_half), model.space(),
                                   seed + 11)
                          .value;
  }
  return out;
}

std::vector<LlnPoint> lln_curve(const PathEnsemble& ens, const std::vector<double>& t_list) {
  if (!ens.has_integrals()) throw InvalidInput("lln_curve: ensemble lacks psi integrals");
  std::vector<LlnPoint> out;
  std::vector<double> vals(static_cast<std::size_t>(ens.n_paths));
  for (double T : t_list) {
    const std::size_t k = snapshot_index(ens, T);
    for (int p = 0; p < ens.n_paths; ++p)
      vals[static_cast<std::size_t>(p)] = ens.integral(p, k) / T;
    const MeanSE m = mean_se(vals);
    out.push_back({T, m.mean, 4.0 * m.se});
  }
  return out;
}

std::vector<LlnPoint> run_lln(const ProcessModel& model, const Observable& psi,
                              const Initial& mu0, const std::vector<double>& t_list,
                              int n_paths, std::uint64_t seed, double dt, Integrator integ) {
  SimulateOptions so;
  so.accumulate = &psi;
  so.stream_tag = "lln";
  const PathEnsemble ens =
      simulate_ensemble(model, mu0, make_grid(model, t_list, dt), n_paths, seed, integ, so);
  return lln_curve(ens, t_list);
}

VarianceCurve variance_curve_from(const PathEnsemble& ens, double v_star,
                                  const std::vector<double>& t_list, std::uint64_t seed) {
  if (!ens.has_integrals()) throw InvalidInput("variance_curve: ensemble lacks psi integrals");
  VarianceCurve out;
  std::vector<double> vals(static_cast<std::size_t>(ens.n_paths));
  std::vector<double> inv_t, v;
  for (double T : t_list) {
    const std::size_t k = snapshot_index(ens, T);
    for (int p = 0; p < ens.n_paths; ++p) {
      const double s = ens.integral(p, k) - v_star * T;
      vals[static_cast<std::size_t>(p)] = s * s / T;
    }
    const MeanSE m = mean_se(vals);
    const double hw = bootstrap_mean_halfwidth(vals, 200, seed ^ fnv1a64("vc") ^
                                                          static_cast<std::uint64_t>(k));
    out.points.push_back({T, m.mean, hw});
    inv_t.push_back(1.0 / T);
    v.push_back(m.mean);
  }
  if (v.size() >= 2) out.slope_vs_inv_t = least_squares_line(inv_t, v).slope;
  return out;
}

VarianceCurve run_variance(const ProcessModel& model, const Observable& psi, double v_star,
                           const Initial& mu0, const std::vector<double>& t_list, int n_paths,
                           std::uint64_t seed, double dt, Integrator integ) {
  SimulateOptions so;
  so.accumulate = &psi;
  so.stream_tag = "variance";
  const PathEnsemble ens =
      simulate_ensemble(model, mu0, make_grid(model, t_list, dt), n_paths, seed, integ, so);
  return variance_curve_from(ens, v_star, t_list, seed);
}

CltOutcome clt_from(const PathEnsemble& ens, double v_star, double sigma, double T,
                    double level, double allowance, bool bootstrap_ks, int n_bins,
                    std::uint64_t seed) {
  CltOutcome out;
  out.sigma_used = sigma;
  const std::size_t k = snapshot_index(ens, T);
  std::vector<double> u(static_cast<std::size_t>(ens.n_paths));
  for (int p = 0; p < ens.n_paths; ++p)
    u[static_cast<std::size_t>(p)] = (ens.integral(p, k) - v_star * T) / std::sqrt(T);
  out.hist = histogram(u, n_bins);
  std::vector<double> u2(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) u2[i] = u[i] * u[i];
  const MeanSE m2 = mean_se(u2);
  out.scaled_second_moment = m2.mean;

  if (!(sigma > 1e-9)) {
    // degenerate Phi_sigma: S_T / sqrt(T) must concentrate at 0; the KS
    // distance is vacuous here and reported as 0
    out.degenerate = true;
    out.threshold = std::max(1e-9, 4.0 * m2.se);
    out.ks_distance = 0.0;
    out.normality_pass = m2.mean <= out.threshold;
    return out;
  }
  out.ks_distance =
      ks_statistic(u, [sigma](double x) { return normal_cdf(x / sigma); });
  if (bootstrap_ks) {
    // parametric bootstrap with re-estimated scale (Lilliefors-style)
    const int B = 200;
    std::vector<double> ks_b(static_cast<std::size_t>(B));
    SplitRng rng = SplitRng::derive(seed, "ks-bootstrap");
    std::vector<double> sample(u.size());
    for (int b = 0; b < B; ++b) {
      for (auto& s : sample) s = sigma * rng.next_gaussian();
      double ss = 0.0;
      for (double s : sample) ss += s * s;
      const double sig_b = std::sqrt(ss / static_cast<double>(sample.size()));
      ks_b[static_cast<std::size_t>(b)] =
          ks_statistic(sample, [sig_b](double x) { return normal_cdf(x / sig_b); });
    }
    std::sort(ks_b.begin(), ks_b.end());
    out.threshold = ks_b[static_cast<std::size_t>((1.0 - level) * (B - 1))];
  } else {
    out.threshold = ks_critical_value(u.size(), level) * (1.0 + allowance);
  }
  out.normality_pass = out.ks_distance < out.threshold;
  return out;
}

CltOutcome run_clt(const ProcessModel& model, const Observable& psi, double v_star,
                   double sigma, const Initial& mu0, double T, int n_paths,
                   std::uint64_t seed, double level, double allowance, double dt,
                   Integrator integ) {
  SimulateOptions so;
  so.accumulate = &psi;
  so.stream_tag = "clt";
  const PathEnsemble ens =
      simulate_ensemble(model, mu0, make_grid(model, {T}, dt), n_paths, seed, integ, so);
  return clt_from(ens, v_star, sigma, T, level, allowance, false, 40, seed);
}

EstimateSE sigma2_martingale(const ProcessModel& model, const Observable& psi,
                             const ChiFunction& chi, double v_star,
                             const EmpiricalMeasure& stationary_ensemble, int n_paths,
                             std::uint64_t seed, double dt, Integrator integ) {
  const double dtv = pick_dt(model, dt);
  const auto st = model.make_stepper(dtv, integ);
  const Observable centered = centered_obs(psi, v_star);
  std::vector<double> m2(static_cast<std::size_t>(n_paths));
#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    SplitRng rng = SplitRng::derive(seed, "sigma2-martingale", static_cast<std::uint64_t>(p));
    const auto a = stationary_ensemble.atom(
        stationary_ensemble.sample_index(rng.next_uniform()));
    Point x(a.begin(), a.end());
    const double chi0 = chi(x);
    double acc = 0.0;
    run_path(*st, dtv, x, 1.0, rng, &centered, &acc);
    const double m1 = chi(x) - chi0 + acc;
    m2[static_cast<std::size_t>(p)] = m1 * m1;
  }
  const MeanSE m = mean_se(m2);
  return {m.mean, m.se};
}

EstimateSE sigma2_green_kubo(const Observable& psi, double v_star, const ChiFunction& chi,
                             const EmpiricalMeasure& stationary_ensemble) {
  const std::size_t n = stationary_ensemble.n_atoms();
  std::vector<double> vals(n);
  double wmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = stationary_ensemble.atom(i);
    vals[i] = 2.0 * (psi(a) - v_star) * chi(a);
    wmean += stationary_ensemble.weight(i) * vals[i];
  }
  // weighted standard error
  double wse2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = stationary_ensemble.weight(i);
    wse2 += w * w * (vals[i] - wmean) * (vals[i] - wmean);
  }
  return {wmean, std::sqrt(wse2)};
}

ContractionFit exact_ctmc_contraction_fit(const GeneratorMatrix& gen,
                                          const std::vector<double>& times, int from_a,
                                          int from_b) {
  std::vector<double> ts = times;
  if (ts.empty() || ts.front() != 0.0) ts.insert(ts.begin(), 0.0);
  std::vector<double> d1(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k)
    d1[k] = exact_marginal_d1(gen, from_a, from_b, ts[k]);
  ContractionFit fit = fit_contraction_curve(ts, d1, 1e-13, 1.0);
  fit.w1_method = "finite-lp(exact marginals)";
  return fit;
}

// ---------------------------------------------------------------------------
// martingale diagnostics bundle

MartingaleDiagnostics run_martingale_diagnostics(const ProcessModel& model,
                                                 const PathEnsemble& ens,
                                                 const ChiFunction& chi,
                                                 const Observable& psi, double v_star,
                                                 double sigma2_ref, double sigma_for_charfn,
                                                 const MartingaleConfig& mc,
                                                 std::uint64_t seed, double dt) {
  MartingaleDiagnostics diag;
  const int N = mc.n_time;
  PathEnsemble prefix = truncate_times(ens, static_cast<std::size_t>(N) + 1);
  if (mc.n_paths < prefix.n_paths) prefix = take_paths(prefix, mc.n_paths);
  const MartingaleDecomposition d = decompose(prefix, chi, v_star);

  diag.mtest = martingale_test(model, prefix, chi, psi, v_star, mc.n_inner, mc.test_states,
                               seed ^ fnv1a64("mtest"), dt);
  diag.m1 = lindeberg_m1(d, mc.epsilon, {std::max(1, N / 4), std::max(1, N / 2), N});

  BlockScheme scheme;
  scheme.k_list = mc.k_list;
  scheme.epsilon = mc.epsilon;
  scheme.n_inner = mc.n_inner;
  scheme.paths_sub = mc.paths_sub;
  diag.m2 = block_variance_m2(model, prefix, d, chi, psi, v_star, scheme, sigma2_ref,
                              seed ^ fnv1a64("m2"), dt);
  diag.m3 = block_overshoot_m3(d, mc.k_list, mc.epsilon);

  std::vector<double> thetas = mc.theta_grid;
  if (thetas.empty())
    for (double th = -3.0; th <= 3.0 + 1e-9; th += 0.5) thetas.push_back(th);
  diag.charfn = char_fn_gap(d, thetas, sigma_for_charfn);

  std::vector<double> r_list = mc.r_t_list;
  if (r_list.empty()) r_list = {static_cast<double>(std::max(1, N / 16)),
                                static_cast<double>(std::max(2, N / 4)),
                                static_cast<double>(N)};
  diag.remainder = remainder_l1_check(ens, chi, r_list);

  std::vector<double> mn2(static_cast<std::size_t>(d.n_paths)), qv(static_cast<std::size_t>(d.n_paths));
  for (int p = 0; p < d.n_paths; ++p) {
    const double m = d.m_at(p, N);
    mn2[static_cast<std::size_t>(p)] = m * m / N;
    qv[static_cast<std::size_t>(p)] = d.realized_qv[static_cast<std::size_t>(p) * (N + 1) + N] / N;
  }
  const MeanSE mreal = mean_se(mn2);
  diag.sigma2_realized = mreal.mean;
  diag.sigma2_realized_se = mreal.se;
  std::vector<double> gapv(static_cast<std::size_t>(d.n_paths));
  for (int p = 0; p < d.n_paths; ++p)
    gapv[static_cast<std::size_t>(p)] = qv[static_cast<std::size_t>(p)] - mn2[static_cast<std::size_t>(p)];
  diag.qv_vs_m2_gap = std::abs(mean_se(gapv).mean);

  diag.all_pass = diag.mtest.pass && diag.m1.pass && diag.m2.pass && diag.m3.pass &&
                  diag.charfn.pass && diag.remainder.pass;
  return diag;
}

// ---------------------------------------------------------------------------
// full pipeline

namespace {

Point default_start(const ProcessModel& model) {
  return Point(static_cast<std::size_t>(model.dim()), 0.0);
}

void add_check(PipelineResult& res, const std::string& name, bool pass, double value,
               double threshold, const std::string& note = "") {
  res.checks.push_back({name, pass, value, threshold, note});
}

VorticityStructure vorticity_structure_stage(const GalerkinVorticity& model,
                                             const ExperimentConfig& cfg) {
  VorticityStructure vs;
  const int dim = model.dim();

  // <B(w), w> = 0 on random states
  SplitRng rng = SplitRng::derive(cfg.run.seed, "b-conservation");
  std::vector<double> state(static_cast<std::size_t>(dim)), b(static_cast<std::size_t>(dim));
  for (int rep = 0; rep < 100; ++rep) {
    for (auto& v : state) v = rng.next_gaussian();
    model.nonlinearity(state, b);
    const double ip = model.field_inner(b, state);
    const double scale = std::max(1.0, std::abs(model.field_inner(state, state)));
    vs.b_inner_max_abs = std::max(vs.b_inner_max_abs, std::abs(ip) / scale);
  }

  // energy balance over [0, t_max]
  const double dtv = cfg.run.dt > 0 ? cfg.run.dt : model.default_dt();
  const SimGrid grid = SimGrid::uniform(cfg.run.t_max, dtv, cfg.run.record_dt);
  const Point w0 = cfg.run.initial.empty() ? default_start(model) : Point(cfg.run.initial);
  const PathEnsemble ens =
      simulate_ensemble(model, w0, grid, cfg.run.n_paths, cfg.run.seed,
                        integrator_from_string(cfg.run.integrator));
  const double e0 = model.field_inner(w0, w0);
  vs.forcing_balance = model.forcing_trace() / (8.0 * M_PI * M_PI);
  std::vector<double> vals(static_cast<std::size_t>(ens.n_paths));
  std::vector<double> evals(static_cast<std::size_t>(ens.n_paths));
  const double eta_rep = std::min(model.eta(), 0.5);
  double hw_max = 0.0;
  for (std::size_t k = 0; k < ens.n_times(); ++k) {
    for (int p = 0; p < ens.n_paths; ++p) {
      const auto s = ens.state(p, k);
      const double e = model.field_inner(s, s);
      vals[static_cast<std::size_t>(p)] = e;
      evals[static_cast<std::size_t>(p)] = std::exp(eta_rep * e);
    }
    const MeanSE m = mean_se(vals);
    vs.times.push_back(ens.times[k]);
    vs.energy.push_back(m.mean);
    vs.energy_hw.push_back(4.0 * m.se);
    vs.exp_moment.push_back(mean_se(evals).mean);
    hw_max = std::max(hw_max, 4.0 * m.se);
  }
  vs.energy_bound = e0 + vs.forcing_balance + hw_max;
  vs.pass = true;
  for (std::size_t k = 0; k < vs.energy.size(); ++k)
    vs.pass = vs.pass && vs.energy[k] <= vs.energy_bound + 1e-12;
  return vs;
}

}  // namespace

PipelineResult full_report(const ExperimentConfig& cfg, const PipelineOverrides* overrides) {
  PipelineResult res;
  const auto model = build_model(cfg.model);
  const Observable psi = build_observable(cfg.observable, *model);
  const Integrator integ = integrator_from_string(cfg.run.integrator);
  const std::uint64_t seed = cfg.run.seed;
  res.model_name = model->name();
  res.seed = seed;

  if (cfg.model.kind == "vorticity") {
    const auto* vm = dynamic_cast<const GalerkinVorticity*>(model.get());
    res.structure = vorticity_structure_stage(*vm, cfg);
    res.metric_note =
        "vorticity reports use the field L2 norm metric on the truncated system in "
        "place of the weighted path-infimum metric; constants are not comparable "
        "to the untruncated dynamics";
    add_check(res, "vorticity-b-conservation", res.structure->b_inner_max_abs <= 1e-10,
              res.structure->b_inner_max_abs, 1e-10);
    add_check(res, "vorticity-energy-bound", res.structure->pass,
              *std::max_element(res.structure->energy.begin(), res.structure->energy.end()),
              res.structure->energy_bound);
    res.all_pass = true;
    for (const auto& c : res.checks) res.all_pass = res.all_pass && c.pass;
    return res;
  }

  const Point start = cfg.run.initial.empty() ? default_start(*model) : Point(cfg.run.initial);
  const Initial mu0 = start;
  const double dtv = cfg.run.dt > 0 ? cfg.run.dt : model->default_dt();

  // oracle block for ctmc models
  const auto* ctmc = dynamic_cast<const CtmcProcess*>(model.get());
  std::optional<StationarySolution> oracle_sol;
  if (ctmc) {
    const int n = ctmc->generator().n();
    std::vector<double> psi_states(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
      const Point xp{static_cast<double>(s)};
      psi_states[static_cast<std::size_t>(s)] = psi(xp);
    }
    oracle_sol = solve_poisson(ctmc->generator(), psi_states);
    OracleBlock ob;
    ob.pi = oracle_sol->pi;
    ob.chi = oracle_sol->chi;
    ob.psi = psi_states;
    ob.v_star = oracle_sol->v_star;
    ob.sigma2_exact = oracle_sol->sigma2_exact;
    ob.poisson_residual = oracle_sol->poisson_residual_inf;
    res.oracle = ob;
    add_check(res, "oracle-poisson-residual", ob.poisson_residual < 1e-10,
              ob.poisson_residual, 1e-10);
  }

  // ---- stage: hypotheses
  std::optional<ContractionFit> fit;
  if (cfg.hypotheses.enabled) {
    std::vector<double> times = cfg.hypotheses.times;
    if (times.empty()) times = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0};
    const Point mu_pt = cfg.hypotheses.mu_point.empty() ? start : Point(cfg.hypotheses.mu_point);
    Point nu_pt = cfg.hypotheses.nu_point;
    if (nu_pt.empty()) {
      nu_pt = mu_pt;
      nu_pt[0] += 1.0;
    }
    ContractionFitOptions fo;
    fo.coupled = cfg.hypotheses.coupled;
    fo.integrator = integ;
    fit = contraction_fit(*model, mu_pt, nu_pt, times, cfg.hypotheses.n_samples,
                          seed ^ fnv1a64("hyp-fit"), fo);
    res.fit = fit;
    add_check(res, "h1-contraction", fit->gamma_hat > 0, fit->gamma_hat, 0.0,
              "gamma_hat > 0 with envelope constant " + std::to_string(fit->c_hat));

    const double gamma = fit->gamma_hat;
    const double t_ly = std::min(50.0, std::ceil(12.0 / gamma));
    const std::vector<double> ly_times =
        model->is_jump_process() ? aligned_times(t_ly, 6, t_ly / 6.0)
                                 : aligned_times(t_ly, 6, dtv);
    res.lyapunov =
        lyapunov_report(*model, mu0, cfg.hypotheses.delta, ly_times,
                        cfg.hypotheses.moment_samples, seed ^ fnv1a64("h3"), 0.0, integ);
    if (res.lyapunov->divergence_suspect)
      throw CheckFailure("h3-lyapunov-bounded", "Lyapunov moment report flags divergence: sup estimate " +
                                   std::to_string(res.lyapunov->sup_estimate));
    add_check(res, "h3-lyapunov-bounded", !res.lyapunov->divergence_suspect,
              res.lyapunov->sup_estimate, 0.0);

    if (cfg.hypotheses.ball_radius > 0 && model->space().kind() != MetricKind::DiscreteTable) {
      res.local_moment = local_moment_report(
          *model, start, cfg.hypotheses.ball_radius, cfg.hypotheses.delta, t_ly,
          cfg.hypotheses.ball_points, std::max(200, cfg.hypotheses.moment_samples / 4),
          seed ^ fnv1a64("h2"), 0.0, integ);
      add_check(res, "h2-local-moment-bounded", !res.local_moment->divergence_suspect,
                res.local_moment->sup_estimate, 0.0);
    }

    std::vector<double> ct = cfg.hypotheses.continuity_times;
    if (ct.empty()) ct = {0.001, 0.004, 0.016, 0.064, 0.256};
    res.continuity = stochastic_continuity_check(*model, start, ct,
                                                 cfg.hypotheses.moment_samples,
                                                 seed ^ fnv1a64("h0"), 0.0, integ);
    add_check(res, "h0-stochastic-continuity", res.continuity->pass,
              res.continuity->d1_values.front(), res.continuity->d1_values.back());
  }

  // corrector-stage constants: exact fit for ctmc, simulated otherwise
  ContractionFit corrector_fit;
  if (ctmc) {
    std::vector<double> ft;
    for (int k = 0; k <= 10; ++k) ft.push_back(0.25 * k);
    corrector_fit = exact_ctmc_contraction_fit(ctmc->generator(), ft);
  } else if (fit) {
    corrector_fit = *fit;
  } else {
    throw CheckFailure("contraction-fit",
                       "corrector stage requires a contraction fit; enable hypotheses");
  }

  // ---- stage: stationary ensemble + main ensemble + LLN
  const auto stat = build_stationary_ensemble(*model, corrector_fit, mu0,
                                              cfg.clt.stationary_samples, cfg.clt.burn_tol,
                                              seed ^ fnv1a64("stationary"), cfg.run.dt, integ);

  SimulateOptions main_opts;
  main_opts.accumulate = &psi;
  main_opts.stream_tag = "main";
  const SimGrid main_grid = SimGrid::uniform(cfg.run.t_max, dtv, cfg.run.record_dt);
  const PathEnsemble ens = simulate_ensemble(*model, mu0, main_grid, cfg.run.n_paths,
                                             seed ^ fnv1a64("main"), integ, main_opts);

  std::vector<double> t_list = cfg.clt.t_list;
  if (t_list.empty())
    t_list = {cfg.run.t_max / 8, cfg.run.t_max / 4, cfg.run.t_max / 2, cfg.run.t_max};
  res.lln = lln_curve(ens, t_list);
  res.v_star_hat = res.lln.back().v_hat;
  res.v_star_halfwidth = res.lln.back().halfwidth;
  if (ctmc) {
    // the time average from a point start carries a deterministic transient
    // |E S_T / T - v*| <= (c/gamma) ||psi||_L d1(delta_x, mu*) / T; allow for
    // it on top of the Monte Carlo halfwidth
    double d_start = stat.noise_floor;
    for (std::size_t a = 0; a < stat.states.n_atoms(); ++a)
      d_start += stat.states.weight(a) * model->space().distance(start, stat.states.atom(a));
    const double transient = (corrector_fit.c_hat / corrector_fit.gamma_hat) *
                             psi.declared_lipschitz_bound.value_or(1.0) * d_start /
                             t_list.back();
    add_check(res, "lln-vs-oracle",
              std::abs(res.v_star_hat - res.oracle->v_star) <=
                  res.v_star_halfwidth + transient,
              res.v_star_hat - res.oracle->v_star, res.v_star_halfwidth + transient);
  }

  // post-stationarity Cesaro / Lipschitz-decay checks
  if (cfg.hypotheses.enabled && fit) {
    std::vector<double> cts;
    for (double t : {0.5, 1.0, 2.0, 4.0}) cts.push_back(t);
    res.cesaro = cesaro_contraction_check(*model, mu0, cts, cfg.hypotheses.n_samples,
                                          seed ^ fnv1a64("cesaro"), *fit, stat.states,
                                          stat.noise_floor, 0.0, integ);
    add_check(res, "cesaro-averaged-contraction", res.cesaro->pass,
              res.cesaro->lhs.empty() ? 0.0 : res.cesaro->lhs.back(),
              res.cesaro->rhs.empty() ? 0.0 : res.cesaro->rhs.back());

    std::vector<Point> xs;
    if (model->space().kind() == MetricKind::DiscreteTable) {
      const int n = model->space().n_states();
      for (int s = 0; s < n; ++s) xs.push_back({static_cast<double>(s)});
    } else {
      for (double off : {-1.0, -0.5, 0.5, 1.0}) {
        Point xp = start;
        xp[0] += off;
        xs.push_back(xp);
      }
    }
    std::vector<double> lt;
    for (int k = 0; k <= 4; ++k) lt.push_back(fit->times.back() * k / 4.0);
    res.lip_decay = semigroup_lipschitz_decay(*model, psi, xs, lt,
                                              cfg.hypotheses.n_samples,
                                              seed ^ fnv1a64("lipdecay"), 0.0, integ);
    add_check(res, "semigroup-lipschitz-decay",
              res.lip_decay->fitted_exponent >= 0.85 * fit->gamma_hat,
              res.lip_decay->fitted_exponent, 0.85 * fit->gamma_hat);
  }

  // ---- stage: corrector
  ChiFunction chi = ChiFunction::exact([](std::span<const double>) { return 0.0; });
  bool have_chi = false;
  if (cfg.corrector.enabled) {
    std::vector<Point> eval_points;
    if (ctmc) {
      for (int s = 0; s < ctmc->generator().n(); ++s)
        eval_points.push_back({static_cast<double>(s)});
    } else {
      RectGrid rg;
      rg.lo.assign(static_cast<std::size_t>(model->dim()), cfg.corrector.grid_lo);
      rg.hi.assign(static_cast<std::size_t>(model->dim()), cfg.corrector.grid_hi);
      rg.n_nodes.assign(static_cast<std::size_t>(model->dim()),
                         model->dim() == 1 ? cfg.corrector.grid_n
                                           : std::min(cfg.corrector.grid_n, 9));
      eval_points = rg.nodes();
    }
    if (overrides && overrides->corrector) {
      res.corrector = *overrides->corrector;
    } else {
      CorrectorOptions co;
      co.dt = cfg.corrector.dt;
      co.integrator = integ;
      co.double_horizon = cfg.corrector.double_horizon;
      res.corrector = corrector_estimate(*model, psi, res.v_star_hat,
                                         res.v_star_halfwidth / 4.0, eval_points,
                                         corrector_fit, cfg.corrector.tol, stat.states,
                                         stat.noise_floor, cfg.corrector.n_paths,
                                         seed ^ fnv1a64("corrector"), co);
    }
    res.chi_lipschitz = corrector_lipschitz_check(*res.corrector, model->space(), corrector_fit);
    add_check(res, "corrector-lipschitz", res.chi_lipschitz->pass, res.chi_lipschitz->bound,
              0.0);

    if (ctmc) {
      // master cross-check: quadrature chi vs the linear-solve chi, both
      // centered against pi
      const auto& pi = res.oracle->pi;
      double mean_quad = 0.0;
      for (std::size_t s = 0; s < pi.size(); ++s) mean_quad += pi[s] * res.corrector->chi[s];
      bool ok = true;
      double worst = 0.0, worst_tol = 0.0;
      for (std::size_t s = 0; s < pi.size(); ++s) {
        const double diff = std::abs(res.corrector->chi[s] - mean_quad - res.oracle->chi[s]);
        const double tol_s = res.corrector->truncation_bound[s] + res.corrector->mc_halfwidth[s];
        if (diff > worst) {
          worst = diff;
          worst_tol = tol_s;
        }
        ok = ok && diff <= tol_s;
      }
      add_check(res, "corrector-vs-oracle-chi", ok, worst, worst_tol);
      chi = ChiFunction::table(res.oracle->chi);
      have_chi = true;
    } else if (model->dim() <= 3) {
      RectGrid rg;
      rg.lo.assign(static_cast<std::size_t>(model->dim()), cfg.corrector.grid_lo);
      rg.hi.assign(static_cast<std::size_t>(model->dim()), cfg.corrector.grid_hi);
      rg.n_nodes.assign(static_cast<std::size_t>(model->dim()),
                         model->dim() == 1 ? cfg.corrector.grid_n
                                           : std::min(cfg.corrector.grid_n, 9));
      chi = ChiFunction::interpolated(rg, res.corrector->chi);
      have_chi = true;
    }
  }

  // ---- stage: sigma^2 estimators
  if (have_chi) {
    res.s2_martingale = sigma2_martingale(*model, psi, chi, res.v_star_hat, stat.states,
                                          std::max(8192, cfg.run.n_paths / 2),
                                          seed ^ fnv1a64("s2m"), cfg.run.dt, integ);
    res.s2_green_kubo = sigma2_green_kubo(psi, res.v_star_hat, chi, stat.states);
    const double comb = 4.0 * (res.s2_martingale->se + res.s2_green_kubo->se);
    add_check(res, "sigma2-estimator-agreement",
              std::abs(res.s2_martingale->value - res.s2_green_kubo->value) <= comb,
              std::abs(res.s2_martingale->value - res.s2_green_kubo->value), comb);
    if (ctmc) {
      add_check(res, "sigma2-martingale-vs-oracle",
                std::abs(res.s2_martingale->value - res.oracle->sigma2_exact) <=
                    4.0 * res.s2_martingale->se,
                std::abs(res.s2_martingale->value - res.oracle->sigma2_exact),
                4.0 * res.s2_martingale->se);
      add_check(res, "sigma2-green-kubo-vs-oracle",
                std::abs(res.s2_green_kubo->value - res.oracle->sigma2_exact) <=
                    4.0 * res.s2_green_kubo->se,
                std::abs(res.s2_green_kubo->value - res.oracle->sigma2_exact),
                4.0 * res.s2_green_kubo->se);
    }
  }

  const double sigma2_best =
      ctmc ? res.oracle->sigma2_exact
           : (res.s2_martingale ? std::max(res.s2_martingale->value, 0.0) : 0.0);
  const double sigma_used = std::sqrt(std::max(
      res.s2_martingale ? res.s2_martingale->value : sigma2_best, 0.0));

  // ---- stage: martingale diagnostics (+ negative control)
  if (cfg.martingale.enabled && have_chi) {
    res.martingale = run_martingale_diagnostics(*model, ens, chi, psi, res.v_star_hat,
                                                sigma2_best, sigma_used, cfg.martingale,
                                                seed ^ fnv1a64("martingale"), cfg.run.dt);
    add_check(res, "martingale-test", res.martingale->mtest.pass,
              res.martingale->mtest.pass_rate, 0.99);
    add_check(res, "lindeberg-m1", res.martingale->m1.pass,
              res.martingale->m1.values.back(), res.martingale->m1.tolerance);
    add_check(res, "block-variance-m2", res.martingale->m2.pass,
              res.martingale->m2.values.back(), res.martingale->m2.tolerance);
    add_check(res, "block-overshoot-m3", res.martingale->m3.pass,
              *std::max_element(res.martingale->m3.values.begin(),
                                res.martingale->m3.values.end()),
              res.martingale->m3.tolerance);
    add_check(res, "char-fn-gap", res.martingale->charfn.pass, res.martingale->charfn.sup_gap,
              res.martingale->charfn.threshold);
    add_check(res, "remainder-l1-decay", res.martingale->remainder.pass,
              res.martingale->remainder.fitted_exponent, 0.5);
    add_check(res, "realized-variance-consistency",
              std::abs(res.martingale->sigma2_realized -
                       (res.s2_martingale ? res.s2_martingale->value : sigma2_best)) <=
                  4.0 * (res.martingale->sigma2_realized_se +
                         (res.s2_martingale ? res.s2_martingale->se : 0.0)) +
                      0.05 * std::max(sigma2_best, 1e-12),
              res.martingale->sigma2_realized,
              res.s2_martingale ? res.s2_martingale->value : sigma2_best);
    add_check(res, "qv-vs-mn2-endpoint",
              res.martingale->qv_vs_m2_gap <=
                  4.0 * std::max(res.s2_martingale ? res.s2_martingale->se : 0.0, 1e-12) +
                      0.05 * std::max(sigma2_best, 1e-12),
              res.martingale->qv_vs_m2_gap, 0.05 * std::max(sigma2_best, 1e-12));

    if (cfg.martingale.negative_control) {
      const ChiFunction chi_bad = chi.perturbed(psi, 0.5);
      // pipeline-consistent sigma estimate under the corrupted corrector
      const EstimateSE s2_bad =
          sigma2_martingale(*model, psi, chi_bad, res.v_star_hat, stat.states,
                            std::max(8192, cfg.run.n_paths / 2), seed ^ fnv1a64("s2m-bad"),
                            cfg.run.dt, integ);
      const EstimateSE gk_bad = sigma2_green_kubo(psi, res.v_star_hat, chi_bad, stat.states);
      res.negative_control = run_martingale_diagnostics(
          *model, ens, chi_bad, psi, res.v_star_hat, sigma2_best,
          std::sqrt(std::max(s2_bad.value, 0.0)), cfg.martingale,
          seed ^ fnv1a64("martingale-neg"), cfg.run.dt);
      // triad inconsistency: the corrupted E M_1^2, the Green-Kubo form and
      // the realized N-step variance cannot agree simultaneously
      const auto z = [](double a, double b, double se) {
        return std::abs(a - b) > 4.0 * se;
      };
      const bool estimators_disagree =
          z(s2_bad.value, gk_bad.value, s2_bad.se + gk_bad.se) ||
          z(s2_bad.value, res.negative_control->sigma2_realized,
            s2_bad.se + res.negative_control->sigma2_realized_se);
      const bool caught = !res.negative_control->mtest.pass &&
                          !res.negative_control->m2.pass &&
                          !res.negative_control->charfn.pass && estimators_disagree &&
                          !res.negative_control->all_pass;
      add_check(res, "negative-control-detected", caught,
                res.negative_control->mtest.pass_rate, 0.99,
                "perturbed chi must fail the conditional-mean, M2, char-fn and "
                "estimator-agreement checks");
    }
  }

  // ---- stage: variance curve + CLT
  res.variance = variance_curve_from(ens, res.v_star_hat, t_list, seed ^ fnv1a64("var"));
  if (res.s2_martingale) {
    const auto& vp = res.variance.points.back();
    add_check(res, "variance-curve-consistency",
              std::abs(vp.value - res.s2_martingale->value) <=
                  vp.halfwidth + 4.0 * res.s2_martingale->se +
                      0.05 * std::max(res.s2_martingale->value, 1e-12),
              std::abs(vp.value - res.s2_martingale->value),
              vp.halfwidth + 4.0 * res.s2_martingale->se);
    if (ctmc)
      add_check(res, "variance-vs-oracle",
                std::abs(vp.value - res.oracle->sigma2_exact) <=
                    std::max(0.05 * res.oracle->sigma2_exact, vp.halfwidth),
                vp.value, res.oracle->sigma2_exact);
  }
  if (cfg.clt.enabled) {
    res.clt = clt_from(ens, res.v_star_hat, sigma_used, cfg.clt.t_end, cfg.clt.level,
                       cfg.clt.allowance, cfg.clt.bootstrap_ks, cfg.clt.n_bins,
                       seed ^ fnv1a64("clt"));
    add_check(res, "clt-ks", res.clt->normality_pass, res.clt->ks_distance,
              res.clt->threshold);
  }

  res.all_pass = true;
  for (const auto& c : res.checks) res.all_pass = res.all_pass && c.pass;
  return res;
}

}  // namespace wclt
