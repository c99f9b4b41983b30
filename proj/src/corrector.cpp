#include "wclt/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"

#include "wclt/errors.hpp"
#include "wclt/stats.hpp"

namespace wclt {

std::size_t RectGrid::total_nodes() const {
  std::size_t n = 1;
  for (int k : n_nodes) n *= static_cast<std::size_t>(k);
  return n;
}

std::vector<Point> RectGrid::nodes() const {
  const int d = dim();
  for (int k = 0; k < d; ++k) {
    if (n_nodes[static_cast<std::size_t>(k)] < 2 || !(hi[static_cast<std::size_t>(k)] > lo[static_cast<std::size_t>(k)]))
      throw InvalidInput("RectGrid: need hi > lo and >= 2 nodes per dimension");
  }
  std::vector<Point> out;
  out.reserve(total_nodes());
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (;;) {
    Point p(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      p[ks] = lo[ks] + (hi[ks] - lo[ks]) * idx[ks] / (n_nodes[ks] - 1);
    }
    out.push_back(std::move(p));
    int k = d - 1;
    while (k >= 0) {
      if (++idx[static_cast<std::size_t>(k)] < n_nodes[static_cast<std::size_t>(k)]) break;
      idx[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return out;
}

ChiFunction ChiFunction::exact(std::function<double(std::span<const double>)> fn) {
  ChiFunction c;
  c.fn_ = std::move(fn);
  return c;
}

ChiFunction ChiFunction::table(std::vector<double> chi_by_state) {
  auto tbl = std::make_shared<std::vector<double>>(std::move(chi_by_state));
  ChiFunction c;
  c.fn_ = [tbl](std::span<const double> x) {
    const auto i = static_cast<std::size_t>(std::lround(x[0]));
    if (i >= tbl->size()) throw InvalidInput("ChiFunction: state index out of table");
    return (*tbl)[i];
  };
  return c;
}

ChiFunction ChiFunction::interpolated(RectGrid grid, std::vector<double> node_values) {
  if (node_values.size() != grid.total_nodes())
    throw InvalidInput("ChiFunction: node value count does not match the grid");
  auto g = std::make_shared<RectGrid>(std::move(grid));
  auto vals = std::make_shared<std::vector<double>>(std::move(node_values));
  ChiFunction c;
  c.fn_ = [g, vals](std::span<const double> x) {
    const int d = g->dim();
    // multilinear interpolation over the 2^d cell corners
    std::vector<std::size_t> base(static_cast<std::size_t>(d));
    std::vector<double> frac(static_cast<std::size_t>(d));
    for (int k = 0; k < d; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      const double span_k = g->hi[ks] - g->lo[ks];
      const double u = (x[ks] - g->lo[ks]) / span_k * (g->n_nodes[ks] - 1);
      if (u < -1e-9 || u > g->n_nodes[ks] - 1 + 1e-9) {
        std::ostringstream os;
        os << "ChiFunction: point (";
        for (int q = 0; q < d; ++q) os << (q ? "," : "") << x[static_cast<std::size_t>(q)];
        os << ") outside the interpolation domain [" << g->lo[ks] << "," << g->hi[ks]
           << "] in coordinate " << k << "; refusing to extrapolate";
        throw InvalidInput(os.str());
      }
      const double uc = std::clamp(u, 0.0, static_cast<double>(g->n_nodes[ks] - 1));
      auto b = static_cast<std::size_t>(uc);
      if (b >= static_cast<std::size_t>(g->n_nodes[ks] - 1))
        b = static_cast<std::size_t>(g->n_nodes[ks] - 2);
      base[ks] = b;
      frac[ks] = uc - static_cast<double>(b);
    }
    double acc = 0.0;
    for (std::size_t corner = 0; corner < (static_cast<std::size_t>(1) << d); ++corner) {
      double w = 1.0;
      std::size_t flat = 0;
      for (int k = 0; k < d; ++k) {
        const auto ks = static_cast<std::size_t>(k);
        const bool hi_side = (corner >> k) & 1;
        w *= hi_side ? frac[ks] : 1.0 - frac[ks];
        flat = flat * static_cast<std::size_t>(g->n_nodes[ks]) + base[ks] + (hi_side ? 1 : 0);
      }
      acc += w * (*vals)[flat];
    }
    return acc;
  };
  return c;
}

ChiFunction ChiFunction::perturbed(const Observable& psi, double scale) const {
  ChiFunction c;
  auto base = fn_;
  auto ev = psi.eval;
  c.fn_ = [base, ev, scale](std::span<const double> x) { return base(x) + scale * ev(x); };
  return c;
}

SemigroupEstimate semigroup_average(const ProcessModel& model, const Observable& psi,
                                    const Point& x, double t, int n_samples,
                                    std::uint64_t seed, double dt, Integrator integ) {
  if (t < 0) throw InvalidInput("semigroup_average: t must be >= 0");
  if (t == 0.0) return {psi(x), 0.0};
  const SimGrid grid = make_grid(model, {0.0, t}, dt);
  SimulateOptions so;
  so.stream_tag = "semigroup";
  const PathEnsemble e = simulate_ensemble(model, x, grid, n_samples, seed, integ, so);
  std::vector<double> vals(static_cast<std::size_t>(e.n_paths));
  for (int p = 0; p < e.n_paths; ++p) vals[static_cast<std::size_t>(p)] = psi(e.state(p, 1));
  const MeanSE m = mean_se(vals);
  return {m.mean, 4.0 * m.se};
}

CorrectorEstimate corrector_estimate(const ProcessModel& model, const Observable& psi,
                                     double v_star, double v_star_halfwidth,
                                     const std::vector<Point>& eval_points,
                                     const ContractionFit& fit, double tol,
                                     const EmpiricalMeasure& mu_star_standin,
                                     double standin_floor, int n_samples,
                                     std::uint64_t seed, const CorrectorOptions& opts) {
  if (!(fit.gamma_hat > 0))
    throw InvalidInput("corrector_estimate: contraction fit missing or gamma <= 0; "
                       "the corrector needs a verified contraction rate");
  if (eval_points.empty()) throw InvalidInput("corrector_estimate: no eval points");
  if (!(tol > 0)) throw InvalidInput("corrector_estimate: tol must be positive");

  CorrectorEstimate est;
  est.points = eval_points;
  est.v_star = v_star;
  est.v_star_halfwidth = v_star_halfwidth;
  est.psi_lipschitz = psi.declared_lipschitz_bound.value_or(1.0);

  // d1(delta_x, mu*) against the long-run stand-in is exactly the weighted
  // mean distance (transport from a point mass), plus the stand-in's floor.
  std::vector<double> d_hat(eval_points.size());
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    double s = 0.0;
    for (std::size_t a = 0; a < mu_star_standin.n_atoms(); ++a)
      s += mu_star_standin.weight(a) *
           model.space().distance(eval_points[i], mu_star_standin.atom(a));
    d_hat[i] = s + standin_floor;
  }

  const double pref = (fit.c_hat / fit.gamma_hat) * est.psi_lipschitz;
  double t_max = opts.min_t_max;
  for (double d : d_hat)
    if (pref * d > tol)
      t_max = std::max(t_max, std::log(pref * d / tol) / fit.gamma_hat);
  const double dtv = opts.dt > 0 ? opts.dt : model.default_dt();
  const auto n_steps = static_cast<std::size_t>(std::ceil(t_max / dtv - 1e-9));
  t_max = static_cast<double>(n_steps) * dtv;
  est.t_max = t_max;
  est.dt_q = dtv;

  Observable centered;
  centered.name = psi.name + "-centered";
  auto ev = psi.eval;
  centered.eval = [ev, v_star](std::span<const double> x) { return ev(x) - v_star; };

  std::vector<double> snap{t_max};
  if (opts.double_horizon) snap.push_back(2.0 * t_max);
  const SimGrid grid = make_grid(model, snap, dtv);

  est.chi.resize(eval_points.size());
  est.mc_halfwidth.resize(eval_points.size());
  est.truncation_bound.resize(eval_points.size());
  if (opts.double_horizon) est.chi_double_horizon.resize(eval_points.size());

  SimulateOptions so;
  so.accumulate = &centered;
  so.stream_tag = "corrector";  // common random numbers across eval points
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    const PathEnsemble e = simulate_ensemble(model, eval_points[i], grid, n_samples, seed,
                                             opts.integrator, so);
    std::vector<double> ints(static_cast<std::size_t>(e.n_paths));
    for (int p = 0; p < e.n_paths; ++p) ints[static_cast<std::size_t>(p)] = e.integral(p, 1);
    const MeanSE m = mean_se(ints);
    est.chi[i] = m.mean;
    // centering error integrates linearly over the horizon
    est.mc_halfwidth[i] = 3.0 * m.se + t_max * v_star_halfwidth;
    est.truncation_bound[i] = pref * std::exp(-fit.gamma_hat * t_max) * d_hat[i];
    if (opts.double_horizon) {
      for (int p = 0; p < e.n_paths; ++p) ints[static_cast<std::size_t>(p)] = e.integral(p, 2);
      est.chi_double_horizon[i] = mean_se(ints).mean;
    }
  }
  return est;
}

LipschitzCheckReport corrector_lipschitz_check(const CorrectorEstimate& est,
                                               const MetricSpace& space,
                                               const ContractionFit& fit) {
  if (est.points.size() < 2)
    throw InvalidInput("corrector_lipschitz_check: need >= 2 eval points");
  LipschitzCheckReport rep;
  rep.bound = (fit.c_hat / fit.gamma_hat) * est.psi_lipschitz;
  for (std::size_t i = 0; i < est.points.size(); ++i)
    for (std::size_t j = i + 1; j < est.points.size(); ++j) {
      const double d = space.distance(est.points[i], est.points[j]);
      if (d <= 0) continue;  // repeated point, skipped
      LipschitzCheckPair pr;
      pr.i = i;
      pr.j = j;
      pr.quotient = std::abs(est.chi[i] - est.chi[j]) / d;
      pr.allowance = rep.bound + (est.mc_halfwidth[i] + est.mc_halfwidth[j] +
                                  est.truncation_bound[i] + est.truncation_bound[j]) /
                                     d;
      pr.pass = pr.quotient <= pr.allowance;
      rep.pass = rep.pass && pr.pass;
      rep.pairs.push_back(pr);
    }
  return rep;
}

std::string corrector_to_json(const CorrectorEstimate& est) {
  nlohmann::ordered_json j;
  j["points"] = est.points;
  j["chi"] = est.chi;
  j["mc_halfwidth"] = est.mc_halfwidth;
  j["truncation_bound"] = est.truncation_bound;
  if (!est.chi_double_horizon.empty()) j["chi_double_horizon"] = est.chi_double_horizon;
  j["t_max"] = est.t_max;
  j["dt_q"] = est.dt_q;
  j["v_star"] = est.v_star;
  j["v_star_halfwidth"] = est.v_star_halfwidth;
  j["psi_lipschitz"] = est.psi_lipschitz;
  return j.dump(2);
}

CorrectorEstimate corrector_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  CorrectorEstimate est;
  est.points = j.at("points").get<std::vector<Point>>();
  est.chi = j.at("chi").get<std::vector<double>>();
  est.mc_halfwidth = j.at("mc_halfwidth").get<std::vector<double>>();
  est.truncation_bound = j.at("truncation_bound").get<std::vector<double>>();
  if (j.contains("chi_double_horizon"))
    est.chi_double_horizon = j.at("chi_double_horizon").get<std::vector<double>>();
  est.t_max = j.at("t_max").get<double>();
  est.dt_q = j.at("dt_q").get<double>();
  est.v_star = j.at("v_star").get<double>();
  est.v_star_halfwidth = j.at("v_star_halfwidth").get<double>();
  est.psi_lipschitz = j.at("psi_lipschitz").get<double>();
  return est;
}

}  // namespace wclt
