#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "wclt/process.hpp"

namespace wclt {

/// Conservative generator of an irreducible finite-state CTMC together with
/// a metric table on the states.
class GeneratorMatrix {
 public:
  GeneratorMatrix(std::vector<double> q_rowmajor, int n_states,
                  std::vector<double> state_distances = {});
  static GeneratorMatrix from_file(const std::string& path,
                                   std::vector<double> state_distances = {});

  int n() const { return n_; }
  double q(int i, int j) const { return q_[static_cast<std::size_t>(i) * n_ + j]; }
  const std::vector<double>& q_flat() const { return q_; }
  const MetricSpace& space() const { return space_; }

 private:
  std::vector<double> q_;
  int n_ = 0;
  MetricSpace space_;
};

struct StationarySolution {
  std::vector<double> pi;
  std::vector<double> chi;    // centered: <pi, chi> = 0
  double v_star = 0.0;
  double sigma2_exact = 0.0;
  double poisson_residual_inf = 0.0;  // || -Q chi - (psi - v*) ||_inf
};

/// Unique pi with pi Q = 0, sum pi = 1 (dense solve, normalization row).
std::vector<double> stationary(const GeneratorMatrix& gen);

/// Solves -Q chi = psi - v* with <pi, chi> = 0.
StationarySolution solve_poisson(const GeneratorMatrix& gen,
                                 const std::vector<double>& psi);

/// Green-Kubo value 2 sum_i pi_i (psi_i - v*) chi_i; clipped to 0 within
/// -1e-10, error beyond.
double exact_sigma2(const StationarySolution& sol, const std::vector<double>& psi);

/// Dense matrix exponential exp(tQ) (transition probabilities).
std::vector<double> transition_matrix(const GeneratorMatrix& gen, double t);

/// Exact d1 between the time-t laws started from two states, via the matrix
/// exponential and the finite-state transport solver.
double exact_marginal_d1(const GeneratorMatrix& gen, int from_a, int from_b, double t);

/// The CTMC as a simulable process model: states are integer-indexed points,
/// jumps are exact (Gillespie), and additive functionals integrate exactly
/// along the jump path.
class CtmcProcess final : public ProcessModel {
 public:
  explicit CtmcProcess(GeneratorMatrix gen);
  int dim() const override { return 1; }
  const MetricSpace& space() const override { return gen_.space(); }
  std::string name() const override { return "ctmc"; }
  std::uint64_t model_hash() const override;
  double default_dt() const override { return 1.0; }
  double stable_dt(Integrator) const override;
  std::unique_ptr<Stepper> make_stepper(double dt, Integrator integ) const override;
  bool is_jump_process() const override { return true; }
  const GeneratorMatrix& generator() const { return gen_; }

 private:
  GeneratorMatrix gen_;
};

/// Exact jump-path ensemble; psi (a per-state table observable) is integrated
/// exactly as sum psi(state) * holding-time.
PathEnsemble simulate_ctmc(const GeneratorMatrix& gen, const Initial& initial, double t_end,
                           double record_dt, int n_paths, std::uint64_t seed,
                           const Observable* psi = nullptr);

/// Per-state table observable on a discrete space.
Observable table_observable(std::vector<double> values, std::string name = "table");

}  // namespace wclt
