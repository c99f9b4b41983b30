#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "wclt/measure.hpp"
#include "wclt/rng.hpp"

namespace wclt {

enum class Integrator { EulerMaruyama, ExponentialEuler };
std::string to_string(Integrator i);
Integrator integrator_from_string(const std::string& s);

/// Uniform step grid with snapshots at multiples of record_dt.
struct SimGrid {
  double dt = 1e-3;
  std::vector<double> snapshot_times;   // starts at 0, strictly increasing
  std::vector<std::size_t> snapshot_steps;  // step index of each snapshot

  static SimGrid uniform(double t_end, double dt, double record_dt);
  /// Snapshots at the given times (0 prepended when missing); every time must
  /// be a multiple of dt.
  static SimGrid at_times(std::vector<double> times, double dt);
  /// Snapshots at arbitrary times; only valid for jump processes, whose
  /// steppers never consult dt.
  static SimGrid at_times_free(std::vector<double> times);
  std::size_t n_steps() const { return snapshot_steps.empty() ? 0 : snapshot_steps.back(); }
};

/// One-step integrator prepared for a fixed dt. Diffusion steppers consume
/// noise_dim() gaussians per step (drawn by the driver so coupled copies can
/// share them); jump steppers draw internally and integrate observables
/// exactly along the jump path.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual int noise_dim() const { return 0; }
  virtual void step(std::span<double> /*x*/, std::span<const double> /*z*/) const {}
  virtual bool jump_model() const { return false; }
  virtual void step_window(std::span<double> /*x*/, double /*dt*/, SplitRng& /*rng*/,
                           const Observable* /*psi*/, double* /*acc*/) const {}
};

class ProcessModel {
 public:
  virtual ~ProcessModel() = default;
  virtual int dim() const = 0;
  virtual const MetricSpace& space() const = 0;
  virtual std::string name() const = 0;
  virtual std::uint64_t model_hash() const = 0;
  virtual double default_dt() const = 0;
  /// Largest stable dt (infinity when unconstrained); exceeding it is an error.
  virtual double stable_dt(Integrator integ) const = 0;
  virtual std::unique_ptr<Stepper> make_stepper(double dt, Integrator integ) const = 0;
  /// Jump processes step snapshot-to-snapshot; dt is irrelevant for them.
  virtual bool is_jump_process() const { return false; }
};

/// Snapshot grid for a model: jump processes take the times as-is, diffusions
/// validate them against dt (0 -> model default).
SimGrid make_grid(const ProcessModel& model, std::vector<double> times, double dt = 0.0);

/// n+1 dt-aligned times from 0 to ~t_end (deduplicated, strictly increasing).
std::vector<double> aligned_times(double t_end, int n, double dt);

struct PathEnsemble {
  int n_paths = 0;
  int dim = 0;
  std::vector<double> times;
  std::vector<double> states;         // path-major: [path][time][coord]
  std::vector<double> psi_integrals;  // path-major [path][time]; empty unless requested
  std::uint64_t seed = 0;
  Integrator integrator = Integrator::ExponentialEuler;
  std::uint64_t model_hash = 0;

  std::span<const double> state(int p, std::size_t k) const {
    const std::size_t off = (static_cast<std::size_t>(p) * times.size() + k) * static_cast<std::size_t>(dim);
    return {states.data() + off, static_cast<std::size_t>(dim)};
  }
  double integral(int p, std::size_t k) const {
    return psi_integrals[static_cast<std::size_t>(p) * times.size() + k];
  }
  bool has_integrals() const { return !psi_integrals.empty(); }
  std::size_t n_times() const { return times.size(); }

  /// Snapshot cloud at time index k as an empirical measure.
  EmpiricalMeasure snapshot_measure(std::size_t k) const;
};

using Initial = std::variant<Point, EmpiricalMeasure>;

struct SimulateOptions {
  const Observable* accumulate = nullptr;  // integrate psi along paths
  std::string stream_tag = "path";
};

PathEnsemble simulate_ensemble(const ProcessModel& model, const Initial& initial,
                               const SimGrid& grid, int n_paths, std::uint64_t seed,
                               Integrator integ, const SimulateOptions& opts = {});

/// Plain serial driver kept as the reference implementation; must produce
/// bit-identical ensembles to simulate_ensemble.
PathEnsemble simulate_ensemble_serial(const ProcessModel& model, const Initial& initial,
                                      const SimGrid& grid, int n_paths, std::uint64_t seed,
                                      Integrator integ, const SimulateOptions& opts = {});

/// Synchronous coupling: both copies consume identical noise per path.
std::pair<PathEnsemble, PathEnsemble> coupled_pair_simulate(
    const ProcessModel& model, const Point& x, const Point& y, const SimGrid& grid,
    int n_paths, std::uint64_t seed, Integrator integ,
    const Observable* accumulate = nullptr);

/// Trapezoidal rule over the ensemble's snapshot grid, one value per path.
std::vector<double> time_integral_observable(const PathEnsemble& ens,
                                             const Observable& psi);

/// First `keep` snapshots / first `n` paths of an ensemble.
PathEnsemble truncate_times(const PathEnsemble& ens, std::size_t keep);
PathEnsemble take_paths(const PathEnsemble& ens, int n);

/// Advances x over [0, t_end] (used by nested conditional-expectation
/// estimators); optionally accumulates the psi path integral.
void run_path(const Stepper& st, double dt, std::span<double> x, double t_end,
              SplitRng& rng, const Observable* psi, double* integral_acc);

// ---------------------------------------------------------------------------
// Models

/// Ornstein-Uhlenbeck with iid coordinates: dX = -theta X dt + sigma dW.
class OUProcess final : public ProcessModel {
 public:
  OUProcess(double theta, double noise_sigma, int dimension);
  int dim() const override { return dim_; }
  const MetricSpace& space() const override { return space_; }
  std::string name() const override { return "ou"; }
  std::uint64_t model_hash() const override;
  double default_dt() const override { return 1e-3; }
  double stable_dt(Integrator integ) const override;
  std::unique_ptr<Stepper> make_stepper(double dt, Integrator integ) const override;
  double theta() const { return theta_; }
  double sigma() const { return sigma_; }

 private:
  double theta_, sigma_;
  int dim_;
  MetricSpace space_;
};

enum class DriftKind { Zero, SinCoordwise, TanhCoordwise };
std::string to_string(DriftKind k);

/// dX = [-A X + F(X)] dt + diag(gamma) dW with symmetric positive-definite A
/// and a built-in Lipschitz drift with certified (L_F, omega2) constants.
class DissipativeSDE final : public ProcessModel {
 public:
  DissipativeSDE(std::vector<double> a_rowmajor, int dimension, DriftKind drift,
                 double drift_param, std::vector<double> noise_gammas);
  int dim() const override { return dim_; }
  const MetricSpace& space() const override { return space_; }
  std::string name() const override { return "dissipative"; }
  std::uint64_t model_hash() const override;
  double default_dt() const override { return 1e-3; }
  double stable_dt(Integrator integ) const override;
  std::unique_ptr<Stepper> make_stepper(double dt, Integrator integ) const override;

  double omega1() const { return omega1_; }
  double omega2() const { return omega2_; }
  double lipschitz_f() const { return lip_f_; }
  void drift_f(std::span<const double> x, std::span<double> out) const;

 private:
  std::vector<double> a_;  // row-major dim x dim
  int dim_;
  DriftKind drift_;
  double drift_param_;
  std::vector<double> gammas_;
  double omega1_ = 0.0, omega2_ = 0.0, lip_f_ = 0.0, lambda_max_ = 0.0;
  MetricSpace space_;
  friend class DissipativeStepper;
};

/// Spectral Galerkin truncation of the stochastic vorticity equation on the
/// torus: modes p in Z^2 \ {0} with |p|_inf <= K, viscosity 1, forcing on a
/// non-degenerate set Z. State stores (Re, Im) of each half-space mode; the
/// metric is the field L2 norm.
class GalerkinVorticity final : public ProcessModel {
 public:
  /// forcing: list of (p1, p2, gamma) for half-space representatives of Z.
  /// with_nonlinearity = false freezes B (the linear diagonal OU system used
  /// by closed-form tests).
  GalerkinVorticity(int mode_cutoff, std::vector<std::array<int, 2>> forcing_modes,
                    std::vector<double> forcing_gammas, double eta,
                    bool with_nonlinearity = true);
  int dim() const override { return static_cast<int>(2 * half_.size()); }
  const MetricSpace& space() const override { return space_; }
  std::string name() const override { return "vorticity"; }
  std::uint64_t model_hash() const override;
  double default_dt() const override { return 2.5e-4; }
  double stable_dt(Integrator integ) const override;
  std::unique_ptr<Stepper> make_stepper(double dt, Integrator integ) const override;

  int cutoff() const { return cutoff_; }
  std::size_t n_half_modes() const { return half_.size(); }
  std::array<int, 2> half_mode(std::size_t i) const { return half_[i]; }
  double eta() const { return eta_; }
  double forcing_trace() const;  // sum over full Z of gamma_p^2

  /// Galerkin-projected advection nonlinearity; fully dealiased by
  /// construction (triads restricted to the retained set).
  void nonlinearity(std::span<const double> state, std::span<double> out) const;
  void nonlinearity_serial(std::span<const double> state, std::span<double> out) const;

  /// Real L2 inner product of two fields given as half-mode states.
  double field_inner(std::span<const double> a, std::span<const double> b) const;

 private:
  void nonlinearity_mode(std::span<const double> full_re, std::span<const double> full_im,
                         std::size_t h, std::span<double> out) const;
  void fill_full(std::span<const double> state, std::span<double> re,
                 std::span<double> im) const;

  int cutoff_;
  double eta_;
  bool with_b_ = true;
  std::vector<std::array<int, 2>> half_;     // half-space modes
  std::vector<int> grid_to_full_;            // (2K+1)^2 grid -> full-mode index, -1 outside
  std::vector<std::array<int, 2>> full_;     // all retained modes
  std::vector<int> full_to_half_;            // full index -> half index (conjugate pairs share)
  std::vector<int> full_conj_;               // 1 if the full mode is the conjugate copy
  std::vector<double> lambda_;               // per half mode, 4 pi^2 |p|^2
  std::vector<std::pair<std::size_t, double>> forced_;  // (half index, gamma)
  MetricSpace space_;
  friend class VorticityStepper;
};

// noise non-degeneracy: finite symmetric forcing set generating Z^2 with
// two distinct moduli; validated at construction
struct NDViolation {
  bool ok = true;
  std::string reason;
};
NDViolation check_noise_nondegeneracy(const std::vector<std::array<int, 2>>& half_modes);

}  // namespace wclt
