#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wclt/process.hpp"

namespace wclt {

/// Exponential-contraction constants fitted on measured d1 curves:
/// measured_d1(t) <= c_hat * exp(-gamma_hat t) * measured_d1(0) on the fit
/// window (upper-envelope corrected least squares).
struct ContractionFit {
  double c_hat = 1.0;
  double gamma_hat = 0.0;
  double ls_c_hat = 1.0;  // plain least-squares intercept, for diagnostics
  std::vector<double> times;
  std::vector<double> measured_d1;
  double residual_max = 0.0;
  double noise_floor = 0.0;
  std::size_t fit_points = 0;
  bool truncated = false;
  bool coupled = false;
  std::string w1_method;
  std::string pair_spec;  // the (mu, nu) initial pair
  std::string warning;
};

struct ContractionFitOptions {
  bool coupled = false;
  double dt = 0.0;  // 0 -> model default
  Integrator integrator = Integrator::ExponentialEuler;
  double floor_factor = 2.0;  // fit window keeps d1 > floor_factor * noise floor
};

ContractionFit contraction_fit(const ProcessModel& model, const Initial& mu,
                               const Initial& nu, const std::vector<double>& times,
                               int n_samples, std::uint64_t seed,
                               const ContractionFitOptions& opts = {});

/// Envelope-corrected least-squares fit on an already-measured d1 curve
/// (times must start at 0); shared by the simulated and exact-marginal fits.
ContractionFit fit_contraction_curve(const std::vector<double>& times,
                                     const std::vector<double>& d1, double noise_floor,
                                     double floor_factor = 2.0);

struct MomentReport {
  double delta = 0.5;
  double sup_estimate = 0.0;
  std::vector<double> times;
  std::vector<double> values;
  std::vector<double> halfwidths;  // CLT halfwidths (z = 4)
  std::optional<double> ball_radius;
  bool divergence_suspect = false;
};

/// H3: Monte Carlo E rho(X_t, x0)^(2+delta) over the time grid.
MomentReport lyapunov_report(const ProcessModel& model, const Initial& mu0, double delta,
                             const std::vector<double>& times, int n_samples,
                             std::uint64_t seed, double dt = 0.0,
                             Integrator integ = Integrator::ExponentialEuler);

/// H2: sup over deterministic low-discrepancy starts in B_R(x0) and t in [0,T].
MomentReport local_moment_report(const ProcessModel& model, const Point& x0, double radius,
                                 double delta, double t_end, int grid_points_on_ball,
                                 int n_samples, std::uint64_t seed, double dt = 0.0,
                                 Integrator integ = Integrator::ExponentialEuler);

struct ContinuityReport {
  std::vector<double> times;       // increasing
  std::vector<double> d1_values;   // d1(delta_x P^t, delta_x), exact vs point target
  std::vector<double> halfwidths;
  bool pass = false;
};

/// Remark 1: d1(delta_x P^t, delta_x) -> 0 as t -> 0+.
ContinuityReport stochastic_continuity_check(const ProcessModel& model, const Point& x,
                                             std::vector<double> small_times, int n_samples,
                                             std::uint64_t seed, double dt = 0.0,
                                             Integrator integ = Integrator::ExponentialEuler);

struct CesaroReport {
  std::vector<double> times;
  std::vector<double> lhs;       // measured d1(mu Q_t, mu*)
  std::vector<double> rhs;       // (c/(t gamma))(1 - e^{-gamma t}) d1(mu, mu*) + slack
  std::vector<bool> bound_ok;
  double d1_mu_mustar = 0.0;
  double sup_mean_rho = 0.0;     // sup_t <delta_x P^t, rho_x0>
  double fitted_C = 0.0;         // sup / (rho_x0(x) + 1)
  bool pass = false;
};

/// Time-averaged contraction bound d1(mu Q_t, mu*) <= (c/(t gamma))(1-e^{-gamma t})
/// d1(mu, mu*), plus the uniform mean-distance growth check.
CesaroReport cesaro_contraction_check(const ProcessModel& model, const Initial& mu,
                                      const std::vector<double>& times, int n_samples,
                                      std::uint64_t seed, const ContractionFit& fit,
                                      const EmpiricalMeasure& mu_star_standin,
                                      double standin_floor, double dt = 0.0,
                                      Integrator integ = Integrator::ExponentialEuler);

struct LipschitzDecayReport {
  std::vector<double> times;
  std::vector<double> quotients;  // max pairwise |P^t psi(x)-P^t psi(y)| / rho(x,y)
  double fitted_exponent = 0.0;
};

/// The Lipschitz seminorm of the estimated P^t psi must decay at a rate
/// compatible with the contraction fit.
LipschitzDecayReport semigroup_lipschitz_decay(const ProcessModel& model,
                                               const Observable& psi,
                                               const std::vector<Point>& xs,
                                               const std::vector<double>& times,
                                               int n_samples, std::uint64_t seed,
                                               double dt = 0.0,
                                               Integrator integ = Integrator::ExponentialEuler);

/// Empirical W1 between snapshot clouds with the method appropriate for the
/// space: finite-lp on discrete tables, sorted in 1-d, assignment in
/// dimension 2..3, sliced (non-exact, flagged) beyond.
struct EmpiricalD1 {
  double value = 0.0;
  std::string method;
  bool is_exact = true;
};
EmpiricalD1 empirical_d1(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         const MetricSpace& space, std::uint64_t seed = 0x5eed);

}  // namespace wclt
