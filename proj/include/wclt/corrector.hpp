#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wclt/hypotheses.hpp"
#include "wclt/process.hpp"

namespace wclt {

/// Rectangular interpolation grid (dim <= 3 in practice).
struct RectGrid {
  std::vector<double> lo, hi;
  std::vector<int> n_nodes;  // per dimension, >= 2

  int dim() const { return static_cast<int>(lo.size()); }
  std::size_t total_nodes() const;
  std::vector<Point> nodes() const;  // row-major
};

/// An evaluable corrector: a closed form, a per-state table, or multilinear
/// interpolation of a CorrectorEstimate on a rectangular grid. Interpolation
/// never extrapolates: out-of-range points raise an error naming the point.
class ChiFunction {
 public:
  static ChiFunction exact(std::function<double(std::span<const double>)> fn);
  static ChiFunction table(std::vector<double> chi_by_state);
  static ChiFunction interpolated(RectGrid grid, std::vector<double> node_values);
  /// chi + scale * psi, the corrupted corrector driving negative controls.
  ChiFunction perturbed(const Observable& psi, double scale) const;

  double operator()(std::span<const double> x) const { return fn_(x); }

 private:
  std::function<double(std::span<const double>)> fn_;
};

struct SemigroupEstimate {
  double value = 0.0;
  double halfwidth = 0.0;  // 4 * SE
};

/// P^t psi(x) by Monte Carlo from a point start (t = 0 shortcuts to psi(x)).
SemigroupEstimate semigroup_average(const ProcessModel& model, const Observable& psi,
                                    const Point& x, double t, int n_samples,
                                    std::uint64_t seed, double dt = 0.0,
                                    Integrator integ = Integrator::ExponentialEuler);

struct CorrectorEstimate {
  std::vector<Point> points;
  std::vector<double> chi;
  std::vector<double> mc_halfwidth;       // 3*SE + T_max * v_star_halfwidth
  std::vector<double> truncation_bound;   // (c/gamma) Lpsi e^{-gamma Tmax} d1(delta_x, mu*)
  std::vector<double> chi_double_horizon; // optional honesty check at 2*T_max
  double t_max = 0.0;
  double dt_q = 0.0;
  double v_star = 0.0;
  double v_star_halfwidth = 0.0;
  double psi_lipschitz = 1.0;
};

struct CorrectorOptions {
  double dt = 0.0;  // quadrature/simulation step; 0 -> model default
  Integrator integrator = Integrator::ExponentialEuler;
  bool double_horizon = false;
  double min_t_max = 1.0;
};

/// Single-ensemble path-integral quadrature of chi(x) = int_0^Tmax P^s(psi - v*) ds,
/// with T_max chosen as the smallest horizon whose rigorous truncation bound
/// is below tol. Common random numbers across quadrature nodes and across
/// eval points.
CorrectorEstimate corrector_estimate(const ProcessModel& model, const Observable& psi,
                                     double v_star, double v_star_halfwidth,
                                     const std::vector<Point>& eval_points,
                                     const ContractionFit& fit, double tol,
                                     const EmpiricalMeasure& mu_star_standin,
                                     double standin_floor, int n_samples,
                                     std::uint64_t seed,
                                     const CorrectorOptions& opts = {});

struct LipschitzCheckPair {
  std::size_t i = 0, j = 0;
  double quotient = 0.0;
  double allowance = 0.0;  // bound + combined uncertainty
  bool pass = true;
};

struct LipschitzCheckReport {
  double bound = 0.0;  // (c_hat / gamma_hat) * ||psi||_L
  std::vector<LipschitzCheckPair> pairs;
  bool pass = true;
};

/// The corrector inherits a Lipschitz bound from the contraction constants:
/// pairwise quotients must stay below (c_hat/gamma_hat) ||psi||_L up to the
/// combined uncertainty.
LipschitzCheckReport corrector_lipschitz_check(const CorrectorEstimate& est,
                                               const MetricSpace& space,
                                               const ContractionFit& fit);

/// Serializable form (reused by the martingale stage across runs).
std::string corrector_to_json(const CorrectorEstimate& est);
CorrectorEstimate corrector_from_json(const std::string& text);

}  // namespace wclt
