#include "wclt/report.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include "wclt/errors.hpp"

namespace wclt {

namespace {

Json fit_json(const ContractionFit& f) {
  Json j;
  j["c_hat"] = f.c_hat;
  j["gamma_hat"] = f.gamma_hat;
  j["ls_c_hat"] = f.ls_c_hat;
  j["times"] = f.times;
  j["measured_d1"] = f.measured_d1;
  j["residual_max"] = f.residual_max;
  j["noise_floor"] = f.noise_floor;
  j["fit_points"] = f.fit_points;
  j["truncated"] = f.truncated;
  j["coupled"] = f.coupled;
  j["w1_method"] = f.w1_method;
  if (!f.pair_spec.empty()) j["pair_spec"] = f.pair_spec;
  if (!f.warning.empty()) j["warning"] = f.warning;
  return j;
}

Json moment_json(const MomentReport& m) {
  Json j;
  j["delta"] = m.delta;
  j["sup_estimate"] = m.sup_estimate;
  j["times"] = m.times;
  j["values"] = m.values;
  j["halfwidths"] = m.halfwidths;
  if (m.ball_radius) j["ball_radius"] = *m.ball_radius;
  j["divergence_suspect"] = m.divergence_suspect;
  return j;
}

Json mart_json(const MartingaleDiagnostics& d) {
  Json j;
  j["martingale_test"] = {{"states_tested", d.mtest.states_tested},
                          {"states_failed", d.mtest.states_failed},
                          {"pass_rate", d.mtest.pass_rate},
                          {"max_abs_z", d.mtest.max_abs_z},
                          {"pass", d.mtest.pass}};
  j["m1"] = {{"epsilon", d.m1.epsilon},
             {"n_list", d.m1.n_list},
             {"values", d.m1.values},
             {"halfwidths", d.m1.halfwidths},
             {"tolerance", d.m1.tolerance},
             {"pass", d.m1.pass}};
  j["m2"] = {{"k_list", d.m2.k_list},
             {"values", d.m2.values},
             {"nested_se", d.m2.nested_se},
             {"sigma2_ref", d.m2.sigma2_ref},
             {"sup_z2", d.m2.sup_z2},
             {"tolerance", d.m2.tolerance},
             {"pass", d.m2.pass}};
  j["m3"] = {{"k_list", d.m3.k_list},
             {"values", d.m3.values},
             {"epsilon", d.m3.epsilon},
             {"tolerance", d.m3.tolerance},
             {"pass", d.m3.pass}};
  j["char_fn"] = {{"theta_grid", d.charfn.theta_grid},
                  {"gaps", d.charfn.gaps},
                  {"sup_gap", d.charfn.sup_gap},
                  {"sigma", d.charfn.sigma},
                  {"threshold", d.charfn.threshold},
                  {"pass", d.charfn.pass}};
  j["remainder"] = {{"t_list", d.remainder.t_list},
                    {"mean_abs_r", d.remainder.mean_abs_r},
                    {"fitted_exponent", d.remainder.fitted_exponent},
                    {"pass", d.remainder.pass}};
  j["sigma2_realized"] = d.sigma2_realized;
  j["qv_vs_mn2_gap"] = d.qv_vs_m2_gap;
  j["all_pass"] = d.all_pass;
  return j;
}

}  // namespace

Json report_json(const PipelineResult& res, const ExperimentConfig& cfg, int threads,
                 double elapsed_seconds, const std::string& timestamp) {
  Json j;
  j["meta"] = {{"seed", res.seed},
               {"config_hash", config_hash_hex(cfg.config_hash)},
               {"generator", kGeneratorName},
               {"threads", threads},
               {"model", res.model_name},
               {"version", "wclt-0.1.0"},
               {"timestamp", timestamp},
               {"elapsed_seconds", elapsed_seconds}};

  Json hyp = Json::object();
  if (res.fit) hyp["contraction"] = fit_json(*res.fit);
  if (res.lyapunov) hyp["lyapunov"] = moment_json(*res.lyapunov);
  if (res.local_moment) hyp["local_moment"] = moment_json(*res.local_moment);
  if (res.continuity)
    hyp["stochastic_continuity"] = {{"times", res.continuity->times},
                                    {"d1_values", res.continuity->d1_values},
                                    {"halfwidths", res.continuity->halfwidths},
                                    {"pass", res.continuity->pass}};
  if (res.cesaro)
    hyp["cesaro"] = {{"times", res.cesaro->times},
                     {"lhs", res.cesaro->lhs},
                     {"rhs", res.cesaro->rhs},
                     {"d1_mu_mustar", res.cesaro->d1_mu_mustar},
                     {"sup_mean_rho", res.cesaro->sup_mean_rho},
                     {"fitted_C", res.cesaro->fitted_C},
                     {"pass", res.cesaro->pass}};
  if (res.lip_decay)
    hyp["lipschitz_decay"] = {{"times", res.lip_decay->times},
                              {"quotients", res.lip_decay->quotients},
                              {"fitted_exponent", res.lip_decay->fitted_exponent}};
  if (!res.metric_note.empty()) hyp["metric_note"] = res.metric_note;
  j["hypotheses"] = hyp;

  Json lln = Json::array();
  for (const auto& p : res.lln)
    lln.push_back({{"T", p.T}, {"v_hat", p.v_hat}, {"halfwidth", p.halfwidth}});
  j["lln"] = {{"points", lln},
              {"v_star_hat", res.v_star_hat},
              {"halfwidth", res.v_star_halfwidth}};

  if (res.corrector) {
    const auto& c = *res.corrector;
    Json cj;
    cj["points"] = c.points;
    cj["chi"] = c.chi;
    cj["mc_halfwidth"] = c.mc_halfwidth;
    cj["truncation_bound"] = c.truncation_bound;
    cj["t_max"] = c.t_max;
    cj["dt_q"] = c.dt_q;
    cj["v_star"] = c.v_star;
    if (res.chi_lipschitz)
      cj["lipschitz_check"] = {{"bound", res.chi_lipschitz->bound},
                               {"pairs", res.chi_lipschitz->pairs.size()},
                               {"pass", res.chi_lipschitz->pass}};
    j["corrector"] = cj;
  }

  if (res.martingale) j["martingale"] = mart_json(*res.martingale);
  if (res.negative_control) j["negative_control"] = mart_json(*res.negative_control);

  Json vc = Json::array();
  for (const auto& p : res.variance.points)
    vc.push_back({{"T", p.T}, {"value", p.value}, {"halfwidth", p.halfwidth}});
  j["variance_curve"] = {{"points", vc}, {"slope_vs_inv_t", res.variance.slope_vs_inv_t}};

  if (res.clt) {
    j["clt"] = {{"ks_distance", res.clt->ks_distance},
                {"threshold", res.clt->threshold},
                {"normality_pass", res.clt->normality_pass},
                {"degenerate", res.clt->degenerate},
                {"sigma_used", res.clt->sigma_used},
                {"scaled_second_moment", res.clt->scaled_second_moment},
                {"sigma2_martingale", res.s2_martingale ? res.s2_martingale->value : 0.0},
                {"sigma2_green_kubo", res.s2_green_kubo ? res.s2_green_kubo->value : 0.0}};
  }

  if (res.oracle)
    j["oracle"] = {{"pi", res.oracle->pi},
                   {"chi", res.oracle->chi},
                   {"psi", res.oracle->psi},
                   {"v_star", res.oracle->v_star},
                   {"sigma2_exact", res.oracle->sigma2_exact},
                   {"poisson_residual", res.oracle->poisson_residual}};

  if (res.structure)
    j["structure"] = {{"b_inner_max_abs", res.structure->b_inner_max_abs},
                      {"times", res.structure->times},
                      {"energy", res.structure->energy},
                      {"energy_halfwidths", res.structure->energy_hw},
                      {"exp_moment", res.structure->exp_moment},
                      {"energy_bound", res.structure->energy_bound},
                      {"forcing_balance", res.structure->forcing_balance},
                      {"pass", res.structure->pass}};

  Json checks = Json::array();
  for (const auto& c : res.checks) {
    Json cj = {{"name", c.name}, {"pass", c.pass}, {"value", c.value},
               {"threshold", c.threshold}};
    if (!c.note.empty()) cj["note"] = c.note;
    checks.push_back(cj);
  }
  j["checks"] = checks;
  j["pass"] = res.all_pass;
  return j;
}

Json merge_reports(const Json& a, const Json& b) {
  const std::string ha = a.at("meta").at("config_hash").get<std::string>();
  const std::string hb = b.at("meta").at("config_hash").get<std::string>();
  if (ha != hb)
    throw InvalidInput("merge_reports: refusing to combine reports with different "
                       "config hashes (" + ha + " vs " + hb + ")");
  Json out = a;
  out["merged_runs"] = Json::array({a.at("meta"), b.at("meta")});
  Json checks = Json::array();
  for (const auto& c : a.at("checks")) checks.push_back(c);
  for (const auto& c : b.at("checks")) checks.push_back(c);
  out["checks"] = checks;
  out["pass"] = a.at("pass").get<bool>() && b.at("pass").get<bool>();
  return out;
}

void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("atomic_write: cannot open " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInput("atomic_write: short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw InvalidInput("atomic_write: rename to " + path + " failed");
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      const std::string& f = row[i];
      const bool quote = f.find_first_of(",\"\r\n") != std::string::npos;
      if (i) out += ',';
      if (quote) {
        out += '"';
        for (char c : f) {
          if (c == '"') out += '"';
          out += c;
        }
        out += '"';
      } else {
        out += f;
      }
    }
    out += "\r\n";
  }
  return out;
}

namespace {
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string variance_curve_csv(const VarianceCurve& vc) {
  std::vector<std::vector<std::string>> rows{{"T", "value", "halfwidth"}};
  for (const auto& p : vc.points) rows.push_back({num(p.T), num(p.value), num(p.halfwidth)});
  return to_csv(rows);
}

std::string histogram_csv(const Histogram& h) {
  std::vector<std::vector<std::string>> rows{{"bin_lo", "bin_hi", "count"}};
  for (std::size_t k = 0; k < h.counts.size(); ++k)
    rows.push_back({num(h.edges[k]), num(h.edges[k + 1]), std::to_string(h.counts[k])});
  return to_csv(rows);
}

std::string clt_plot_script(const CltOutcome& clt, const std::string& csv_name) {
  std::string s;
  s += "# gnuplot script: CLT histogram against the normal density\n";
  s += "set datafile separator ','\n";
  s += "set style fill solid 0.4\n";
  s += "set xlabel 'S_T / sqrt(T)'\n";
  s += "set ylabel 'density'\n";
  s += "sigma = " + num(clt.sigma_used) + "\n";
  s += "phi(x) = exp(-x*x/(2*sigma*sigma)) / (sigma*sqrt(2*pi))\n";
  double total = 0.0;
  for (auto c : clt.hist.counts) total += static_cast<double>(c);
  const double width = clt.hist.counts.empty()
                           ? 1.0
                           : (clt.hist.hi - clt.hist.lo) / clt.hist.counts.size();
  s += "norm = " + num(total * width) + "\n";
  s += "plot '" + csv_name +
       "' every ::1 using (($1+$2)/2):($3/norm) with boxes title 'empirical', "
       "phi(x) with lines lw 2 title 'normal'\n";
  return s;
}

void write_ensemble(const std::string& path, const PathEnsemble& ens) {
  std::string bytes;
  const char magic[8] = {'W', 'C', 'L', 'T', 'E', 'N', 'S', '1'};
  bytes.append(magic, 8);
  auto put_u64 = [&](std::uint64_t v) { bytes.append(reinterpret_cast<const char*>(&v), 8); };
  auto put_u32 = [&](std::uint32_t v) { bytes.append(reinterpret_cast<const char*>(&v), 4); };
  put_u64(ens.model_hash);
  put_u64(ens.seed);
  put_u32(static_cast<std::uint32_t>(ens.integrator));
  put_u32(static_cast<std::uint32_t>(ens.n_paths));
  put_u32(static_cast<std::uint32_t>(ens.n_times()));
  put_u32(static_cast<std::uint32_t>(ens.dim));
  put_u32(ens.has_integrals() ? 1u : 0u);
  put_u32(0u);  // reserved
  auto put_f64s = [&](const std::vector<double>& v) {
    bytes.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double));
  };
  put_f64s(ens.times);
  put_f64s(ens.states);
  if (ens.has_integrals()) put_f64s(ens.psi_integrals);
  atomic_write(path, bytes);
}

PathEnsemble read_ensemble(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("read_ensemble: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (std::memcmp(magic, "WCLTENS1", 8) != 0)
    throw InvalidInput("read_ensemble: bad magic / unsupported version in " + path);
  PathEnsemble ens;
  auto get_u64 = [&] {
    std::uint64_t v;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  auto get_u32 = [&] {
    std::uint32_t v;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  ens.model_hash = get_u64();
  ens.seed = get_u64();
  ens.integrator = static_cast<Integrator>(get_u32());
  ens.n_paths = static_cast<int>(get_u32());
  const auto n_times = get_u32();
  ens.dim = static_cast<int>(get_u32());
  const bool has_int = get_u32() != 0;
  get_u32();  // reserved
  ens.times.resize(n_times);
  in.read(reinterpret_cast<char*>(ens.times.data()),
          static_cast<std::streamsize>(n_times * sizeof(double)));
  ens.states.resize(static_cast<std::size_t>(ens.n_paths) * n_times *
                    static_cast<std::size_t>(ens.dim));
  in.read(reinterpret_cast<char*>(ens.states.data()),
          static_cast<std::streamsize>(ens.states.size() * sizeof(double)));
  if (has_int) {
    ens.psi_integrals.resize(static_cast<std::size_t>(ens.n_paths) * n_times);
    in.read(reinterpret_cast<char*>(ens.psi_integrals.data()),
            static_cast<std::streamsize>(ens.psi_integrals.size() * sizeof(double)));
  }
  if (!in) throw InvalidInput("read_ensemble: truncated file " + path);
  return ens;
}

}  // namespace wclt
