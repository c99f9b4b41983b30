#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wclt/config.hpp"
#include "wclt/corrector.hpp"
#include "wclt/hypotheses.hpp"
#include "wclt/martingale.hpp"
#include "wclt/oracle.hpp"
#include "wclt/stats.hpp"

namespace wclt {

struct EstimateSE {
  double value = 0.0;
  double se = 0.0;
};

struct StationaryEnsembleResult {
  EmpiricalMeasure states;
  double noise_floor = 0.0;
  double t_burn = 0.0;
};

/// mu* stand-in: burn-in horizon from the contraction fit, one thinned long
/// path pooled with independent replicas.
StationaryEnsembleResult build_stationary_ensemble(const ProcessModel& model,
                                                   const ContractionFit& fit,
                                                   const Initial& mu0, int n_total,
                                                   double tol, std::uint64_t seed,
                                                   double dt = 0.0,
                                                   Integrator integ = Integrator::ExponentialEuler);

struct LlnPoint {
  double T = 0.0;
  double v_hat = 0.0;
  double halfwidth = 0.0;  // 4 * SE
};

/// Time-average curve from an ensemble that accumulated psi integrals.
std::vector<LlnPoint> lln_curve(const PathEnsemble& ens, const std::vector<double>& t_list);

std::vector<LlnPoint> run_lln(const ProcessModel& model, const Observable& psi,
                              const Initial& mu0, const std::vector<double>& t_list,
                              int n_paths, std::uint64_t seed, double dt = 0.0,
                              Integrator integ = Integrator::ExponentialEuler);

struct VariancePoint {
  double T = 0.0;
  double value = 0.0;      // (1/T) E S_T^2
  double halfwidth = 0.0;  // bootstrap
};

struct VarianceCurve {
  std::vector<VariancePoint> points;
  double slope_vs_inv_t = 0.0;  // fitted c in value(T) ~ sigma2 + c/T
};

VarianceCurve variance_curve_from(const PathEnsemble& ens, double v_star,
                                  const std::vector<double>& t_list, std::uint64_t seed);

VarianceCurve run_variance(const ProcessModel& model, const Observable& psi, double v_star,
                           const Initial& mu0, const std::vector<double>& t_list, int n_paths,
                           std::uint64_t seed, double dt = 0.0,
                           Integrator integ = Integrator::ExponentialEuler);

struct CltOutcome {
  double ks_distance = 0.0;
  double threshold = 0.0;
  bool normality_pass = false;
  bool degenerate = false;  // sigma = 0 branch
  double sigma_used = 0.0;
  double scaled_second_moment = 0.0;  // E (S_T/sqrt(T))^2, degenerate check
  Histogram hist;
};

CltOutcome clt_from(const PathEnsemble& ens, double v_star, double sigma, double T,
                    double level, double allowance, bool bootstrap_ks, int n_bins,
                    std::uint64_t seed);

CltOutcome run_clt(const ProcessModel& model, const Observable& psi, double v_star,
                   double sigma, const Initial& mu0, double T, int n_paths,
                   std::uint64_t seed, double level = 0.01, double allowance = 0.2,
                   double dt = 0.0, Integrator integ = Integrator::ExponentialEuler);

/// sigma^2 := E_{mu*} M_1^2 over unit-time continuations from stationary starts.
EstimateSE sigma2_martingale(const ProcessModel& model, const Observable& psi,
                             const ChiFunction& chi, double v_star,
                             const EmpiricalMeasure& stationary_ensemble, int n_paths,
                             std::uint64_t seed, double dt = 0.0,
                             Integrator integ = Integrator::ExponentialEuler);

/// Green-Kubo form 2 <mu*, (psi - v*) chi> over the stationary stand-in.
EstimateSE sigma2_green_kubo(const Observable& psi, double v_star, const ChiFunction& chi,
                             const EmpiricalMeasure& stationary_ensemble);

struct Check {
  std::string name;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string note;
};

struct MartingaleDiagnostics {
  MartingaleTestReport mtest;
  LindebergReport m1;
  BlockVarianceReport m2;
  OvershootReport m3;
  CharFnReport charfn;
  RemainderL1Report remainder;
  double sigma2_realized = 0.0;     // E M_N^2 / N
  double sigma2_realized_se = 0.0;
  double qv_vs_m2_gap = 0.0;        // |E<M>_N/N - E M_N^2/N| endpoint gap
  bool all_pass = false;
};

struct VorticityStructure {
  double b_inner_max_abs = 0.0;     // max |<B(w), w>| over random states
  std::vector<double> times;
  std::vector<double> energy;       // E |w_t|^2
  std::vector<double> energy_hw;
  std::vector<double> exp_moment;   // E exp(eta_report |w_t|^2), reported only
  double energy_bound = 0.0;
  double forcing_balance = 0.0;     // Tr Q / (8 pi^2)
  bool pass = false;
};

struct OracleBlock {
  std::vector<double> pi, chi, psi;
  double v_star = 0.0;
  double sigma2_exact = 0.0;
  double poisson_residual = 0.0;
};

struct PipelineResult {
  std::string model_name;
  std::uint64_t seed = 0;
  // hypotheses
  std::optional<ContractionFit> fit;
  std::optional<MomentReport> lyapunov;
  std::optional<MomentReport> local_moment;
  std::optional<ContinuityReport> continuity;
  std::optional<CesaroReport> cesaro;
  std::optional<LipschitzDecayReport> lip_decay;
  // law of large numbers / variance / clt
  std::vector<LlnPoint> lln;
  double v_star_hat = 0.0;
  double v_star_halfwidth = 0.0;
  std::optional<CorrectorEstimate> corrector;
  std::optional<LipschitzCheckReport> chi_lipschitz;
  std::optional<MartingaleDiagnostics> martingale;
  std::optional<MartingaleDiagnostics> negative_control;
  std::optional<EstimateSE> s2_martingale;
  std::optional<EstimateSE> s2_green_kubo;
  VarianceCurve variance;
  std::optional<CltOutcome> clt;
  // model-specific
  std::optional<OracleBlock> oracle;
  std::optional<VorticityStructure> structure;
  std::string metric_note;
  std::vector<Check> checks;
  bool all_pass = false;
};

struct PipelineOverrides {
  std::optional<CorrectorEstimate> corrector;  // reuse a persisted estimate
};

/// Runs hypotheses -> corrector -> martingale -> clt in dependency order; a
/// hard hypothesis failure aborts with CheckFailure naming the hypothesis.
PipelineResult full_report(const ExperimentConfig& cfg,
                           const PipelineOverrides* overrides = nullptr);

/// Bundled martingale diagnostics on a decomposition (used for both the main
/// run and the perturbed-chi negative control).
MartingaleDiagnostics run_martingale_diagnostics(const ProcessModel& model,
                                                 const PathEnsemble& ens,
                                                 const ChiFunction& chi,
                                                 const Observable& psi, double v_star,
                                                 double sigma2_ref, double sigma_for_charfn,
                                                 const MartingaleConfig& mc,
                                                 std::uint64_t seed, double dt);

/// Contraction constants fitted on the exact d1 curve between two delta
/// starts, computed from the matrix exponential (small chains only).
ContractionFit exact_ctmc_contraction_fit(const GeneratorMatrix& gen,
                                          const std::vector<double>& times, int from_a = 0,
                                          int from_b = 1);

}  // namespace wclt
