#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "wclt/corrector.hpp"
#include "wclt/process.hpp"

namespace wclt {

/// Per-path martingale decomposition at integer times 0..N:
///   M_n = chi(X_n) - chi(X_0) + int_0^n (psi - v*) ds,   Z_n = M_n - M_{n-1},
///   R_T = (chi(X_0) - chi(X_T)) / sqrt(T).
struct MartingaleDecomposition {
  int n_paths = 0;
  int N = 0;
  std::vector<double> M;            // [path][0..N]
  std::vector<double> Z;            // [path][0..N-1], Z[p][n] = Z_{n+1}
  std::vector<double> R_T;          // per path at T = N
  std::vector<double> realized_qv;  // [path][0..N] partial sums of Z^2

  double m_at(int p, int n) const { return M[static_cast<std::size_t>(p) * (N + 1) + n]; }
  double z_at(int p, int n) const { return Z[static_cast<std::size_t>(p) * N + n]; }
};

/// Requires integer snapshot times 0..N and accumulated psi integrals.
MartingaleDecomposition decompose(const PathEnsemble& ens, const ChiFunction& chi,
                                  double v_star);

struct MartingaleTestReport {
  std::size_t states_tested = 0;
  std::size_t states_failed = 0;
  double pass_rate = 1.0;
  double max_abs_z = 0.0;  // max |conditional mean| / SE
  bool pass = true;
};

/// Re-simulates one-step continuations from stored states and checks
/// E[Z | X_n] = 0 within 4 standard errors; pass when >= 99% of states agree.
MartingaleTestReport martingale_test(const ProcessModel& model, const PathEnsemble& ens,
                                     const ChiFunction& chi, const Observable& psi,
                                     double v_star, int n_inner, int max_states,
                                     std::uint64_t seed, double dt = 0.0,
                                     Integrator integ = Integrator::ExponentialEuler);

struct LindebergReport {
  double epsilon = 0.0;
  std::vector<int> n_list;
  std::vector<double> values;      // (1/N) sum_j E[Z^2, |Z| >= eps sqrt(N)]
  std::vector<double> halfwidths;  // 4*SE over paths
  double tolerance = 0.0;
  bool pass = false;
};

LindebergReport lindeberg_m1(const MartingaleDecomposition& d, double epsilon,
                             const std::vector<int>& n_list);

struct BlockScheme {
  std::vector<int> k_list{2, 4, 8};
  double epsilon = 0.5;
  std::vector<double> theta_grid;
  int n_inner = 256;
  int paths_sub = 32;
};

struct BlockVarianceReport {
  std::vector<int> k_list;
  std::vector<double> values;  // M2 statistic per K
  std::vector<double> nested_se;
  double sigma2_ref = 0.0;
  double sup_z2 = 0.0;  // sup_n mean Z_n^2 (uniform increment-moment bound)
  double tolerance = 0.0;
  bool pass = false;
};

/// Nested-MC check of M2: from each block-start state, n_inner fresh
/// continuations of length K estimate the conditional quadratic variation.
BlockVarianceReport block_variance_m2(const ProcessModel& model, const PathEnsemble& ens,
                                      const MartingaleDecomposition& d,
                                      const ChiFunction& chi, const Observable& psi,
                                      double v_star, const BlockScheme& scheme,
                                      double sigma2_ref, std::uint64_t seed,
                                      double dt = 0.0,
                                      Integrator integ = Integrator::ExponentialEuler);

struct OvershootReport {
  std::vector<int> k_list;
  std::vector<double> values;
  double epsilon = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

OvershootReport block_overshoot_m3(const MartingaleDecomposition& d,
                                   const std::vector<int>& k_list, double epsilon);

struct CharFnReport {
  std::vector<double> theta_grid;
  std::vector<double> gaps;
  double sup_gap = 0.0;
  double sigma = 0.0;
  double threshold = 0.05;
  bool pass = false;
};

/// sup_theta | E exp(i theta M_N / sqrt(N)) - exp(-sigma^2 theta^2 / 2) |.
CharFnReport char_fn_gap(const MartingaleDecomposition& d,
                         const std::vector<double>& theta_grid, double sigma,
                         double threshold = 0.05);

/// R(a) from e^{ia} = 1 + ia - a^2/2 - R(a) a^2, R(0) = 0; |R| <= 1.
std::complex<double> remainder_R(double a);

struct RemainderL1Report {
  std::vector<double> t_list;
  std::vector<double> mean_abs_r;
  double fitted_exponent = 0.0;  // pass when within [0.35, 0.65]
  bool pass = false;
};

/// E|R_T| over a list of horizons (snapshot times of the ensemble).
RemainderL1Report remainder_l1_check(const PathEnsemble& ens, const ChiFunction& chi,
                                     const std::vector<double>& t_list);

/// Sample covariance of (Z_m, Z_n) for a few lag pairs; used by the
/// orthogonality invariant.
double increment_covariance(const MartingaleDecomposition& d, int m, int n);

}  // namespace wclt
