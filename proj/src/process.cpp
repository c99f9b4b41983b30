#include "wclt/process.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "wclt/errors.hpp"

namespace wclt {

std::string to_string(Integrator i) {
  return i == Integrator::EulerMaruyama ? "euler-maruyama" : "exponential-euler";
}

Integrator integrator_from_string(const std::string& s) {
  if (s == "euler-maruyama") return Integrator::EulerMaruyama;
  if (s == "exponential-euler") return Integrator::ExponentialEuler;
  throw InvalidInput("unknown integrator: " + s);
}

SimGrid SimGrid::uniform(double t_end, double dt, double record_dt) {
  if (!(dt > 0) || !(t_end > 0) || !(record_dt > 0))
    throw InvalidInput("SimGrid: t_end, dt, record_dt must be positive");
  const auto every = static_cast<std::size_t>(std::llround(record_dt / dt));
  if (every < 1 || std::abs(every * dt - record_dt) > 1e-9 * record_dt)
    throw InvalidInput("SimGrid: record_dt must be a multiple of dt");
  const auto n_rec = static_cast<std::size_t>(std::llround(t_end / record_dt));
  if (n_rec < 1 || std::abs(static_cast<double>(n_rec) * record_dt - t_end) > 1e-9 * t_end)
    throw InvalidInput("SimGrid: t_end must be a multiple of record_dt");
  SimGrid g;
  g.dt = dt;
  g.snapshot_times.resize(n_rec + 1);
  g.snapshot_steps.resize(n_rec + 1);
  for (std::size_t k = 0; k <= n_rec; ++k) {
    g.snapshot_steps[k] = k * every;
    g.snapshot_times[k] = static_cast<double>(k) * record_dt;
  }
  return g;
}

SimGrid SimGrid::at_times(std::vector<double> times, double dt) {
  if (!(dt > 0)) throw InvalidInput("SimGrid: dt must be positive");
  if (times.empty()) throw InvalidInput("SimGrid: need at least one snapshot time");
  if (times.front() != 0.0) times.insert(times.begin(), 0.0);
  SimGrid g;
  g.dt = dt;
  g.snapshot_times.reserve(times.size());
  g.snapshot_steps.reserve(times.size());
  std::size_t prev_step = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    const double t = times[k];
    const auto step = static_cast<std::size_t>(std::llround(t / dt));
    if (std::abs(static_cast<double>(step) * dt - t) > 1e-9 * std::max(1.0, t))
      throw InvalidInput("SimGrid: snapshot time " + std::to_string(t) +
                         " is not a multiple of dt");
    if (k > 0 && step <= prev_step)
      throw InvalidInput("SimGrid: snapshot times must be strictly increasing");
    g.snapshot_steps.push_back(step);
    g.snapshot_times.push_back(static_cast<double>(step) * dt);
    prev_step = step;
  }
  return g;
}

SimGrid SimGrid::at_times_free(std::vector<double> times) {
  if (times.empty()) throw InvalidInput("SimGrid: need at least one snapshot time");
  if (times.front() != 0.0) times.insert(times.begin(), 0.0);
  SimGrid g;
  double gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1]))
      throw InvalidInput("SimGrid: snapshot times must be strictly increasing");
    gap = std::min(gap, times[k] - times[k - 1]);
  }
  g.dt = times.size() > 1 ? gap : 1.0;
  g.snapshot_times = std::move(times);
  g.snapshot_steps.resize(g.snapshot_times.size());
  std::iota(g.snapshot_steps.begin(), g.snapshot_steps.end(), std::size_t{0});
  return g;
}

SimGrid make_grid(const ProcessModel& model, std::vector<double> times, double dt) {
  if (model.is_jump_process()) return SimGrid::at_times_free(std::move(times));
  return SimGrid::at_times(std::move(times), dt > 0 ? dt : model.default_dt());
}

std::vector<double> aligned_times(double t_end, int n, double dt) {
  std::vector<double> out{0.0};
  for (int k = 1; k <= n; ++k) {
    const double t = std::round(t_end * k / n / dt) * dt;
    if (t > out.back() + 1e-12) out.push_back(t);
  }
  return out;
}

EmpiricalMeasure PathEnsemble::snapshot_measure(std::size_t k) const {
  std::vector<double> flat(static_cast<std::size_t>(n_paths) * static_cast<std::size_t>(dim));
  for (int p = 0; p < n_paths; ++p) {
    const auto s = state(p, k);
    std::copy(s.begin(), s.end(),
              flat.begin() + static_cast<std::size_t>(p) * static_cast<std::size_t>(dim));
  }
  return EmpiricalMeasure(std::move(flat), dim);
}

// ---------------------------------------------------------------------------
// drivers

namespace {

void run_one_path(const ProcessModel& model, const Stepper& st, const SimGrid& grid,
                  const Initial& initial, std::uint64_t seed,
                  const std::string& stream_tag, int p, const Observable* psi,
                  double* states_out, double* integ_out) {
  SplitRng rng = SplitRng::derive(seed, stream_tag, static_cast<std::uint64_t>(p));
  const int dim = model.dim();
  Point x;
  if (std::holds_alternative<Point>(initial)) {
    x = std::get<Point>(initial);
  } else {
    const auto& mu = std::get<EmpiricalMeasure>(initial);
    const auto a = mu.n_atoms() == 1 ? mu.atom(0) : mu.atom(mu.sample_index(rng.next_uniform()));
    x.assign(a.begin(), a.end());
  }
  if (static_cast<int>(x.size()) != dim)
    throw InvalidInput("simulate_ensemble: initial point dimension mismatch");

  const std::size_t n_snap = grid.snapshot_times.size();
  auto record = [&](std::size_t k, double acc) {
    std::copy(x.begin(), x.end(), states_out + k * static_cast<std::size_t>(dim));
    if (integ_out) integ_out[k] = acc;
  };

  double acc = 0.0;
  record(0, acc);
  if (st.jump_model()) {
    for (std::size_t k = 1; k < n_snap; ++k) {
      st.step_window(x, grid.snapshot_times[k] - grid.snapshot_times[k - 1], rng, psi, psi ? &acc : nullptr);
      record(k, acc);
    }
  } else {
    std::vector<double> z(static_cast<std::size_t>(st.noise_dim()));
    double psi_prev = psi ? (*psi)(x) : 0.0;
    std::size_t next = 1;
    const std::size_t n_total = grid.n_steps();
    for (std::size_t s = 1; s <= n_total; ++s) {
      for (auto& g : z) g = rng.next_gaussian();
      st.step(x, z);
      if (psi) {
        const double cur = (*psi)(x);
        acc += 0.5 * (psi_prev + cur) * grid.dt;
        psi_prev = cur;
      }
      if (next < n_snap && s == grid.snapshot_steps[next]) {
        record(next, acc);
        ++next;
      }
    }
  }
}

PathEnsemble make_ensemble_shell(const ProcessModel& model, const SimGrid& grid,
                                 int n_paths, std::uint64_t seed, Integrator integ,
                                 bool with_integrals) {
  PathEnsemble e;
  e.n_paths = n_paths;
  e.dim = model.dim();
  e.times = grid.snapshot_times;
  e.states.resize(static_cast<std::size_t>(n_paths) * e.times.size() * static_cast<std::size_t>(e.dim));
  if (with_integrals) e.psi_integrals.resize(static_cast<std::size_t>(n_paths) * e.times.size());
  e.seed = seed;
  e.integrator = integ;
  e.model_hash = model.model_hash();
  return e;
}

void check_dt(const ProcessModel& model, const SimGrid& grid, Integrator integ) {
  const double bound = model.stable_dt(integ);
  if (grid.dt > bound * (1.0 + 1e-12))
    throw InvalidInput("unstable dt " + std::to_string(grid.dt) + " for model '" +
                       model.name() + "' with " + to_string(integ) +
                       "; use dt <= " + std::to_string(bound));
}

void check_finite(const PathEnsemble& e) {
  for (double v : e.states)
    if (!std::isfinite(v)) throw NumericalError("simulate_ensemble: non-finite state produced");
}

PathEnsemble simulate_impl(const ProcessModel& model, const Initial& initial,
                           const SimGrid& grid, int n_paths, std::uint64_t seed,
                           Integrator integ, const SimulateOptions& opts, bool parallel) {
  if (n_paths < 1) throw InvalidInput("simulate_ensemble: n_paths must be positive");
  check_dt(model, grid, integ);
  const auto st = model.make_stepper(grid.dt, integ);
  PathEnsemble e = make_ensemble_shell(model, grid, n_paths, seed, integ,
                                       opts.accumulate != nullptr);
  const std::size_t stride_s = e.times.size() * static_cast<std::size_t>(e.dim);
  const std::size_t stride_i = e.times.size();
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (int p = 0; p < n_paths; ++p)
      run_one_path(model, *st, grid, initial, seed, opts.stream_tag, p, opts.accumulate,
                   e.states.data() + static_cast<std::size_t>(p) * stride_s,
                   opts.accumulate ? e.psi_integrals.data() + static_cast<std::size_t>(p) * stride_i : nullptr);
  } else {
    for (int p = 0; p < n_paths; ++p)
      run_one_path(model, *st, grid, initial, seed, opts.stream_tag, p, opts.accumulate,
                   e.states.data() + static_cast<std::size_t>(p) * stride_s,
                   opts.accumulate ? e.psi_integrals.data() + static_cast<std::size_t>(p) * stride_i : nullptr);
  }
  check_finite(e);
  return e;
}

}  // namespace

PathEnsemble simulate_ensemble(const ProcessModel& model, const Initial& initial,
                               const SimGrid& grid, int n_paths, std::uint64_t seed,
                               Integrator integ, const SimulateOptions& opts) {
  return simulate_impl(model, initial, grid, n_paths, seed, integ, opts, true);
}

PathEnsemble simulate_ensemble_serial(const ProcessModel& model, const Initial& initial,
                                      const SimGrid& grid, int n_paths, std::uint64_t seed,
                                      Integrator integ, const SimulateOptions& opts) {
  return simulate_impl(model, initial, grid, n_paths, seed, integ, opts, false);
}

std::pair<PathEnsemble, PathEnsemble> coupled_pair_simulate(
    const ProcessModel& model, const Point& x, const Point& y, const SimGrid& grid,
    int n_paths, std::uint64_t seed, Integrator integ, const Observable* psi) {
  check_dt(model, grid, integ);
  const auto st = model.make_stepper(grid.dt, integ);
  PathEnsemble ex = make_ensemble_shell(model, grid, n_paths, seed, integ, psi != nullptr);
  PathEnsemble ey = ex;
  const int dim = model.dim();
  if (static_cast<int>(x.size()) != dim || static_cast<int>(y.size()) != dim)
    throw InvalidInput("coupled_pair_simulate: initial point dimension mismatch");
  const std::size_t n_snap = grid.snapshot_times.size();
  const std::size_t stride_s = n_snap * static_cast<std::size_t>(dim);

#pragma omp parallel for schedule(static)
  for (int p = 0; p < n_paths; ++p) {
    Point a = x, b = y;
    double acc_a = 0.0, acc_b = 0.0;
    double* sa = ex.states.data() + static_cast<std::size_t>(p) * stride_s;
    double* sb = ey.states.data() + static_cast<std::size_t>(p) * stride_s;
    auto record = [&](std::size_t k) {
      std::copy(a.begin(), a.end(), sa + k * static_cast<std::size_t>(dim));
      std::copy(b.begin(), b.end(), sb + k * static_cast<std::size_t>(dim));
      if (psi) {
        ex.psi_integrals[static_cast<std::size_t>(p) * n_snap + k] = acc_a;
        ey.psi_integrals[static_cast<std::size_t>(p) * n_snap + k] = acc_b;
      }
    };
    record(0);
    if (st->jump_model()) {
      // common-uniform coupling: both copies replay the same derived stream
      SplitRng rng_a = SplitRng::derive(seed, "pair", static_cast<std::uint64_t>(p));
      SplitRng rng_b = rng_a;
      for (std::size_t k = 1; k < n_snap; ++k) {
        const double w = grid.snapshot_times[k] - grid.snapshot_times[k - 1];
        st->step_window(a, w, rng_a, psi, psi ? &acc_a : nullptr);
        st->step_window(b, w, rng_b, psi, psi ? &acc_b : nullptr);
        record(k);
      }
    } else {
      SplitRng rng = SplitRng::derive(seed, "pair", static_cast<std::uint64_t>(p));
      std::vector<double> z(static_cast<std::size_t>(st->noise_dim()));
      double pa = psi ? (*psi)(a) : 0.0, pb = psi ? (*psi)(b) : 0.0;
      std::size_t next = 1;
      for (std::size_t s = 1; s <= grid.n_steps(); ++s) {
        for (auto& g : z) g = rng.next_gaussian();
        st->step(a, z);
        st->step(b, z);
        if (psi) {
          const double ca = (*psi)(a), cb = (*psi)(b);
          acc_a += 0.5 * (pa + ca) * grid.dt;
          acc_b += 0.5 * (pb + cb) * grid.dt;
          pa = ca;
          pb = cb;
        }
        if (next < n_snap && s == grid.snapshot_steps[next]) {
          record(next);
          ++next;
        }
      }
    }
  }
  check_finite(ex);
  check_finite(ey);
  return {std::move(ex), std::move(ey)};
}

std::vector<double> time_integral_observable(const PathEnsemble& ens,
                                             const Observable& psi) {
  std::vector<double> out(static_cast<std::size_t>(ens.n_paths), 0.0);
  const std::size_t n = ens.n_times();
#pragma omp parallel for schedule(static)
  for (int p = 0; p < ens.n_paths; ++p) {
    double acc = 0.0;
    double prev = psi(ens.state(p, 0));
    for (std::size_t k = 1; k < n; ++k) {
      const double cur = psi(ens.state(p, k));
      acc += 0.5 * (prev + cur) * (ens.times[k] - ens.times[k - 1]);
      prev = cur;
    }
    out[static_cast<std::size_t>(p)] = acc;
  }
  return out;
}

PathEnsemble truncate_times(const PathEnsemble& ens, std::size_t keep) {
  if (keep > ens.n_times()) throw InvalidInput("truncate_times: keep exceeds snapshot count");
  PathEnsemble out;
  out.n_paths = ens.n_paths;
  out.dim = ens.dim;
  out.times.assign(ens.times.begin(), ens.times.begin() + static_cast<std::ptrdiff_t>(keep));
  out.seed = ens.seed;
  out.integrator = ens.integrator;
  out.model_hash = ens.model_hash;
  out.states.resize(static_cast<std::size_t>(ens.n_paths) * keep * static_cast<std::size_t>(ens.dim));
  if (ens.has_integrals()) out.psi_integrals.resize(static_cast<std::size_t>(ens.n_paths) * keep);
  for (int p = 0; p < ens.n_paths; ++p) {
    for (std::size_t k = 0; k < keep; ++k) {
      const auto s = ens.state(p, k);
      std::copy(s.begin(), s.end(),
                out.states.begin() +
                    static_cast<std::ptrdiff_t>((static_cast<std::size_t>(p) * keep + k) *
                                                static_cast<std::size_t>(ens.dim)));
      if (ens.has_integrals())
        out.psi_integrals[static_cast<std::size_t>(p) * keep + k] = ens.integral(p, k);
    }
  }
  return out;
}

PathEnsemble take_paths(const PathEnsemble& ens, int n) {
  if (n < 1 || n > ens.n_paths) throw InvalidInput("take_paths: n outside path count");
  PathEnsemble out = ens;
  out.n_paths = n;
  out.states.resize(static_cast<std::size_t>(n) * ens.n_times() * static_cast<std::size_t>(ens.dim));
  if (ens.has_integrals())
    out.psi_integrals.resize(static_cast<std::size_t>(n) * ens.n_times());
  return out;
}

void run_path(const Stepper& st, double dt, std::span<double> x, double t_end,
              SplitRng& rng, const Observable* psi, double* integral_acc) {
  if (st.jump_model()) {
    st.step_window(x, t_end, rng, psi, integral_acc);
    return;
  }
  const auto n = static_cast<std::size_t>(std::llround(t_end / dt));
  std::vector<double> z(static_cast<std::size_t>(st.noise_dim()));
  double prev = psi ? (*psi)(x) : 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    for (auto& g : z) g = rng.next_gaussian();
    st.step(x, z);
    if (psi && integral_acc) {
      const double cur = (*psi)(x);
      *integral_acc += 0.5 * (prev + cur) * dt;
      prev = cur;
    }
  }
}

// ---------------------------------------------------------------------------
// Ornstein-Uhlenbeck

namespace {

class OUExpStepper final : public Stepper {
 public:
  OUExpStepper(double theta, double sigma, double dt, int dim)
      : decay_(std::exp(-theta * dt)),
        noise_sd_(sigma * std::sqrt((1.0 - std::exp(-2.0 * theta * dt)) / (2.0 * theta))),
        dim_(dim) {}
  int noise_dim() const override { return dim_; }
  void step(std::span<double> x, std::span<const double> z) const override {
    for (int d = 0; d < dim_; ++d)
      x[static_cast<std::size_t>(d)] = decay_ * x[static_cast<std::size_t>(d)] +
                                       noise_sd_ * z[static_cast<std::size_t>(d)];
  }

 private:
  double decay_, noise_sd_;
  int dim_;
};

class OUEulerStepper final : public Stepper {
 public:
  OUEulerStepper(double theta, double sigma, double dt, int dim)
      : drift_(theta * dt), noise_sd_(sigma * std::sqrt(dt)), dim_(dim) {}
  int noise_dim() const override { return dim_; }
  void step(std::span<double> x, std::span<const double> z) const override {
    for (int d = 0; d < dim_; ++d)
      x[static_cast<std::size_t>(d)] += -drift_ * x[static_cast<std::size_t>(d)] +
                                        noise_sd_ * z[static_cast<std::size_t>(d)];
  }

 private:
  double drift_, noise_sd_;
  int dim_;
};

std::uint64_t hash_params(const std::string& s) { return fnv1a64(s); }

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

OUProcess::OUProcess(double theta, double noise_sigma, int dimension)
    : theta_(theta), sigma_(noise_sigma), dim_(dimension),
      space_(MetricSpace::euclidean(dimension)) {
  if (!(theta > 0)) throw InvalidInput("OUProcess: theta must be positive");
  if (!(noise_sigma >= 0)) throw InvalidInput("OUProcess: noise_sigma must be nonnegative");
}

std::uint64_t OUProcess::model_hash() const {
  return hash_params("ou:" + fmt(theta_) + ":" + fmt(sigma_) + ":" + std::to_string(dim_));
}

double OUProcess::stable_dt(Integrator integ) const {
  return integ == Integrator::EulerMaruyama ? 1.0 / theta_
                                            : std::numeric_limits<double>::infinity();
}

std::unique_ptr<Stepper> OUProcess::make_stepper(double dt, Integrator integ) const {
  if (integ == Integrator::ExponentialEuler)
    return std::make_unique<OUExpStepper>(theta_, sigma_, dt, dim_);
  return std::make_unique<OUEulerStepper>(theta_, sigma_, dt, dim_);
}

// ---------------------------------------------------------------------------
// Dissipative SDE

std::string to_string(DriftKind k) {
  switch (k) {
    case DriftKind::Zero: return "zero";
    case DriftKind::SinCoordwise: return "sin";
    case DriftKind::TanhCoordwise: return "tanh";
  }
  return "?";
}

class DissipativeStepper final : public Stepper {
 public:
  DissipativeStepper(const DissipativeSDE& model, double dt, Integrator integ)
      : model_(model), dim_(model.dim_), dt_(dt), euler_(integ == Integrator::EulerMaruyama) {
    using Eigen::MatrixXd;
    using Eigen::VectorXd;
    const auto n = static_cast<Eigen::Index>(dim_);
    MatrixXd A(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j)
        A(i, j) = model.a_[static_cast<std::size_t>(i * n + j)];
    if (euler_) {
      a_flat_ = model.a_;
      noise_sd_.resize(static_cast<std::size_t>(dim_));
      for (int d = 0; d < dim_; ++d)
        noise_sd_[static_cast<std::size_t>(d)] = model.gammas_[static_cast<std::size_t>(d)] * std::sqrt(dt);
      return;
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
    const MatrixXd V = es.eigenvectors();
    const VectorXd lam = es.eigenvalues();
    MatrixXd E = MatrixXd::Zero(n, n), Phi = MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      E(i, i) = std::exp(-lam(i) * dt);
      Phi(i, i) = lam(i) > 1e-14 ? (1.0 - E(i, i)) / lam(i) : dt;
    }
    const MatrixXd M1 = V * E * V.transpose();
    const MatrixXd M2 = V * Phi * V.transpose();
    // exact one-step covariance of the stochastic convolution
    MatrixXd Qe = V.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      Qe.row(i) *= model.gammas_[static_cast<std::size_t>(i)];
    const MatrixXd QV = Qe.transpose() * Qe;  // V^T Q V
    MatrixXd Mcov(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        const double s = lam(i) + lam(j);
        Mcov(i, j) = QV(i, j) * (s > 1e-14 ? (1.0 - std::exp(-s * dt)) / s : dt);
      }
    const MatrixXd C = Eigen::LLT<MatrixXd>(Mcov).matrixL();
    const MatrixXd N = V * C;
    m1_.assign(M1.data(), M1.data() + n * n);
    m2_.assign(M2.data(), M2.data() + n * n);
    nz_.assign(N.data(), N.data() + n * n);
  }

  int noise_dim() const override { return dim_; }

  void step(std::span<double> x, std::span<const double> z) const override {
    thread_local std::vector<double> f, y;
    f.resize(static_cast<std::size_t>(dim_));
    y.resize(static_cast<std::size_t>(dim_));
    model_.drift_f(x, f);
    if (euler_) {
      for (int i = 0; i < dim_; ++i) {
        double ax = 0.0;
        for (int j = 0; j < dim_; ++j)
          ax += a_flat_[static_cast<std::size_t>(i * dim_ + j)] * x[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] +
                                         (-ax + f[static_cast<std::size_t>(i)]) * dt_ +
                                         noise_sd_[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
      }
    } else {
      // column-major Eigen buffers
      for (int i = 0; i < dim_; ++i) {
        double v = 0.0;
        for (int j = 0; j < dim_; ++j)
          v += m1_[static_cast<std::size_t>(j * dim_ + i)] * x[static_cast<std::size_t>(j)] +
               m2_[static_cast<std::size_t>(j * dim_ + i)] * f[static_cast<std::size_t>(j)] +
               nz_[static_cast<std::size_t>(j * dim_ + i)] * z[static_cast<std::size_t>(j)];
        y[static_cast<std::size_t>(i)] = v;
      }
    }
    std::copy(y.begin(), y.end(), x.begin());
  }

 private:
  const DissipativeSDE& model_;
  int dim_;
  double dt_;
  bool euler_;
  std::vector<double> m1_, m2_, nz_, a_flat_, noise_sd_;
};

DissipativeSDE::DissipativeSDE(std::vector<double> a_rowmajor, int dimension,
                               DriftKind drift, double drift_param,
                               std::vector<double> noise_gammas)
    : a_(std::move(a_rowmajor)), dim_(dimension), drift_(drift),
      drift_param_(drift_param), gammas_(std::move(noise_gammas)),
      space_(MetricSpace::euclidean(dimension)) {
  if (a_.size() != static_cast<std::size_t>(dim_) * static_cast<std::size_t>(dim_))
    throw InvalidInput("DissipativeSDE: A must be dim x dim");
  if (gammas_.size() != static_cast<std::size_t>(dim_))
    throw InvalidInput("DissipativeSDE: need one noise amplitude per coordinate");
  Eigen::MatrixXd A(dim_, dim_);
  for (int i = 0; i < dim_; ++i)
    for (int j = 0; j < dim_; ++j) {
      A(i, j) = a_[static_cast<std::size_t>(i * dim_ + j)];
      if (std::abs(A(i, j) - a_[static_cast<std::size_t>(j * dim_ + i)]) > 1e-12)
        throw InvalidInput("DissipativeSDE: A must be symmetric");
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  omega1_ = es.eigenvalues().minCoeff();
  lambda_max_ = es.eigenvalues().maxCoeff();
  if (!(omega1_ > 0)) throw InvalidInput("DissipativeSDE: A must be positive definite");
  switch (drift_) {
    case DriftKind::Zero:
      lip_f_ = 0.0;
      omega2_ = 0.0;
      break;
    case DriftKind::SinCoordwise:
      lip_f_ = std::abs(drift_param_);
      omega2_ = -std::abs(drift_param_);
      break;
    case DriftKind::TanhCoordwise:
      lip_f_ = std::abs(drift_param_);
      omega2_ = 0.0;  // -c tanh is monotone nonincreasing
      break;
  }
  if (!(omega1_ + omega2_ > 0))
    throw InvalidInput("DissipativeSDE: omega1 + omega2 must be positive (got " +
                       fmt(omega1_ + omega2_) + ")");
}

void DissipativeSDE::drift_f(std::span<const double> x, std::span<double> out) const {
  switch (drift_) {
    case DriftKind::Zero:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case DriftKind::SinCoordwise:
      for (int d = 0; d < dim_; ++d)
        out[static_cast<std::size_t>(d)] = drift_param_ * std::sin(x[static_cast<std::size_t>(d)]);
      break;
    case DriftKind::TanhCoordwise:
      for (int d = 0; d < dim_; ++d)
        out[static_cast<std::size_t>(d)] = -drift_param_ * std::tanh(x[static_cast<std::size_t>(d)]);
      break;
  }
}

std::uint64_t DissipativeSDE::model_hash() const {
  std::string s = "dissipative:" + std::to_string(dim_) + ":" + to_string(drift_) + ":" + fmt(drift_param_);
  for (double v : a_) s += ":" + fmt(v);
  for (double v : gammas_) s += ":" + fmt(v);
  return hash_params(s);
}

double DissipativeSDE::stable_dt(Integrator integ) const {
  return integ == Integrator::EulerMaruyama ? 1.0 / lambda_max_
                                            : std::numeric_limits<double>::infinity();
}

std::unique_ptr<Stepper> DissipativeSDE::make_stepper(double dt, Integrator integ) const {
  return std::make_unique<DissipativeStepper>(*this, dt, integ);
}

// ---------------------------------------------------------------------------
// Galerkin vorticity

namespace {
long long gcd_ll(long long a, long long b) {
  a = std::abs(a);
  b = std::abs(b);
  while (b) {
    const long long t = a % b;
    a = b;
    b = t;
  }
  return a;
}
}  // namespace

NDViolation check_noise_nondegeneracy(const std::vector<std::array<int, 2>>& half_modes) {
  NDViolation v;
  if (half_modes.empty()) {
    v.ok = false;
    v.reason = "forcing set is empty";
    return v;
  }
  for (const auto& p : half_modes)
    if (p[0] == 0 && p[1] == 0) {
      v.ok = false;
      v.reason = "forcing set contains the mean mode (0,0)";
      return v;
    }
  // generation of Z^2: Smith-normal-form style gcd check over the symmetric
  // completion (signs do not change the generated subgroup)
  long long g1 = 0;
  for (const auto& p : half_modes) g1 = gcd_ll(g1, gcd_ll(p[0], p[1]));
  long long g2 = 0;
  for (std::size_t i = 0; i < half_modes.size(); ++i)
    for (std::size_t j = i + 1; j < half_modes.size(); ++j) {
      const long long det = static_cast<long long>(half_modes[i][0]) * half_modes[j][1] -
                            static_cast<long long>(half_modes[i][1]) * half_modes[j][0];
      g2 = gcd_ll(g2, det);
    }
  if (g1 != 1 || g2 != 1) {
    v.ok = false;
    v.reason = "forcing set does not generate Z^2 (entry gcd " + std::to_string(g1) +
               ", minor gcd " + std::to_string(g2) + ")";
    return v;
  }
  const long long m0 = static_cast<long long>(half_modes[0][0]) * half_modes[0][0] +
                       static_cast<long long>(half_modes[0][1]) * half_modes[0][1];
  bool two_moduli = false;
  for (const auto& p : half_modes) {
    const long long m = static_cast<long long>(p[0]) * p[0] + static_cast<long long>(p[1]) * p[1];
    if (m != m0) two_moduli = true;
  }
  if (!two_moduli) {
    v.ok = false;
    v.reason = "forcing set needs two modes with different moduli |p1| != |p2|";
  }
  return v;
}

class VorticityStepper final : public Stepper {
 public:
  VorticityStepper(const GalerkinVorticity& m, double dt, Integrator integ)
      : m_(m), dt_(dt), euler_(integ == Integrator::EulerMaruyama) {
    const std::size_t nh = m.half_.size();
    decay_.resize(nh);
    phi_.resize(nh);
    for (std::size_t h = 0; h < nh; ++h) {
      const double lam = m.lambda_[h];
      decay_[h] = std::exp(-lam * dt);
      phi_[h] = (1.0 - decay_[h]) / lam;
    }
    noise_sd_.assign(nh, 0.0);
    for (const auto& [h, gamma] : m.forced_) {
      const double lam = m.lambda_[h];
      noise_sd_[h] = euler_ ? gamma * std::sqrt(dt / 2.0)
                            : gamma * std::sqrt((1.0 - std::exp(-2.0 * lam * dt)) / (4.0 * lam));
    }
  }

  int noise_dim() const override { return static_cast<int>(2 * m_.forced_.size()); }

  void step(std::span<double> x, std::span<const double> z) const override {
    thread_local std::vector<double> b;
    b.resize(x.size());
    m_.nonlinearity(x, b);
    const std::size_t nh = m_.half_.size();
    if (euler_) {
      for (std::size_t h = 0; h < nh; ++h) {
        const double lam = m_.lambda_[h];
        x[2 * h] += (-lam * x[2 * h] + b[2 * h]) * dt_;
        x[2 * h + 1] += (-lam * x[2 * h + 1] + b[2 * h + 1]) * dt_;
      }
    } else {
      for (std::size_t h = 0; h < nh; ++h) {
        x[2 * h] = decay_[h] * x[2 * h] + phi_[h] * b[2 * h];
        x[2 * h + 1] = decay_[h] * x[2 * h + 1] + phi_[h] * b[2 * h + 1];
      }
    }
    std::size_t zi = 0;
    for (const auto& [h, gamma] : m_.forced_) {
      (void)gamma;
      x[2 * h] += noise_sd_[h] * z[zi++];
      x[2 * h + 1] += noise_sd_[h] * z[zi++];
    }
  }

 private:
  const GalerkinVorticity& m_;
  double dt_;
  bool euler_;
  std::vector<double> decay_, phi_, noise_sd_;
};

GalerkinVorticity::GalerkinVorticity(int mode_cutoff,
                                     std::vector<std::array<int, 2>> forcing_modes,
                                     std::vector<double> forcing_gammas, double eta,
                                     bool with_nonlinearity)
    : cutoff_(mode_cutoff), eta_(eta), with_b_(with_nonlinearity) {
  if (cutoff_ < 1) throw InvalidInput("GalerkinVorticity: mode cutoff must be >= 1");
  if (!(eta_ > 0)) throw InvalidInput("GalerkinVorticity: eta must be positive");
  if (forcing_modes.size() != forcing_gammas.size())
    throw InvalidInput("GalerkinVorticity: one gamma per forcing mode");
  const auto nd = check_noise_nondegeneracy(forcing_modes);
  if (!nd.ok) throw InvalidInput("GalerkinVorticity: ND violated: " + nd.reason);

  const int K = cutoff_;
  const int side = 2 * K + 1;
  grid_to_full_.assign(static_cast<std::size_t>(side) * side, -1);
  // half-space representatives first (p1 > 0, or p1 == 0 and p2 > 0)
  for (int p1 = -K; p1 <= K; ++p1)
    for (int p2 = -K; p2 <= K; ++p2) {
      if (p1 == 0 && p2 == 0) continue;
      if (p1 > 0 || (p1 == 0 && p2 > 0)) half_.push_back({p1, p2});
    }
  full_ = half_;
  full_to_half_.resize(half_.size());
  full_conj_.assign(half_.size(), 0);
  std::iota(full_to_half_.begin(), full_to_half_.end(), 0);
  for (std::size_t h = 0; h < half_.size(); ++h) {
    full_.push_back({-half_[h][0], -half_[h][1]});
    full_to_half_.push_back(static_cast<int>(h));
    full_conj_.push_back(1);
  }
  for (std::size_t f = 0; f < full_.size(); ++f) {
    const auto [p1, p2] = full_[f];
    grid_to_full_[static_cast<std::size_t>(p1 + K) * side + (p2 + K)] = static_cast<int>(f);
  }
  lambda_.resize(half_.size());
  const double fourpi2 = 4.0 * M_PI * M_PI;
  for (std::size_t h = 0; h < half_.size(); ++h)
    lambda_[h] = fourpi2 * (half_[h][0] * half_[h][0] + half_[h][1] * half_[h][1]);

  for (std::size_t i = 0; i < forcing_modes.size(); ++i) {
    auto p = forcing_modes[i];
    if (std::max(std::abs(p[0]), std::abs(p[1])) > K)
      throw InvalidInput("GalerkinVorticity: forcing mode outside cutoff");
    if (!(forcing_gammas[i] > 0))
      throw InvalidInput("GalerkinVorticity: forcing amplitudes must be positive");
    // normalize to the half-space representative (gamma_-p = gamma_p)
    if (p[0] < 0 || (p[0] == 0 && p[1] < 0)) p = {-p[0], -p[1]};
    bool found = false;
    for (std::size_t h = 0; h < half_.size(); ++h)
      if (half_[h] == p) {
        forced_.emplace_back(h, forcing_gammas[i]);
        found = true;
        break;
      }
    if (!found) throw InvalidInput("GalerkinVorticity: forcing mode lookup failed");
  }
  std::sort(forced_.begin(), forced_.end());

  // field L2 metric: |omega|^2 = sum over full modes = 2 * sum over half modes
  space_ = MetricSpace::weighted(std::vector<double>(2 * half_.size(), std::sqrt(2.0)));
}

double GalerkinVorticity::forcing_trace() const {
  double s = 0.0;
  for (const auto& [h, g] : forced_) {
    (void)h;
    s += 2.0 * g * g;  // both +p and -p carry gamma_p
  }
  return s;
}

void GalerkinVorticity::fill_full(std::span<const double> state, std::span<double> re,
                                  std::span<double> im) const {
  const std::size_t nh = half_.size();
  for (std::size_t f = 0; f < full_.size(); ++f) {
    const auto h = static_cast<std::size_t>(full_to_half_[f]);
    re[f] = state[2 * h];
    im[f] = full_conj_[f] ? -state[2 * h + 1] : state[2 * h + 1];
  }
  (void)nh;
}

void GalerkinVorticity::nonlinearity_mode(std::span<const double> fre,
                                          std::span<const double> fim, std::size_t h,
                                          std::span<double> out) const {
  const int K = cutoff_;
  const int side = 2 * K + 1;
  const auto [k1, k2] = half_[h];
  double acc_re = 0.0, acc_im = 0.0;
  for (std::size_t f = 0; f < full_.size(); ++f) {
    const auto [p1, p2] = full_[f];
    const int q1 = k1 - p1, q2 = k2 - p2;
    if (q1 < -K || q1 > K || q2 < -K || q2 > K) continue;
    if (q1 == 0 && q2 == 0) continue;
    const int qf = grid_to_full_[static_cast<std::size_t>(q1 + K) * side + (q2 + K)];
    // velocity mode u_p = -(i/2pi) (p_perp / |p|^2) w_p with p_perp = (p2,-p1);
    // against (grad w)_q = 2 pi i q w_q the 2 pi i factors cancel, leaving the
    // real triad coefficient (p_perp . q) / |p|^2
    const double coef = (static_cast<double>(p2) * q1 - static_cast<double>(p1) * q2) /
                        (static_cast<double>(p1) * p1 + static_cast<double>(p2) * p2);
    const double ar = fre[f], ai = fim[f];
    const double br = fre[static_cast<std::size_t>(qf)], bi = fim[static_cast<std::size_t>(qf)];
    acc_re += coef * (ar * br - ai * bi);
    acc_im += coef * (ar * bi + ai * br);
  }
  // B_k = - sum coef * w_p w_q
  out[2 * h] = -acc_re;
  out[2 * h + 1] = -acc_im;
}

void GalerkinVorticity::nonlinearity(std::span<const double> state,
                                     std::span<double> out) const {
  if (!with_b_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  thread_local std::vector<double> fre, fim;
  fre.resize(full_.size());
  fim.resize(full_.size());
  fill_full(state, fre, fim);
  // plain spans: thread_local names inside the parallel region would resolve
  // to each worker's own (empty) instance
  const std::span<const double> fre_s = fre, fim_s = fim;
  const auto nh = static_cast<int>(half_.size());
#pragma omp parallel for schedule(static) if (nh >= 256)
  for (int h = 0; h < nh; ++h)
    nonlinearity_mode(fre_s, fim_s, static_cast<std::size_t>(h), out);
}

void GalerkinVorticity::nonlinearity_serial(std::span<const double> state,
                                            std::span<double> out) const {
  if (!with_b_) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  std::vector<double> fre(full_.size()), fim(full_.size());
  fill_full(state, fre, fim);
  for (std::size_t h = 0; h < half_.size(); ++h) nonlinearity_mode(fre, fim, h, out);
}

double GalerkinVorticity::field_inner(std::span<const double> a,
                                      std::span<const double> b) const {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return 2.0 * s;
}

std::uint64_t GalerkinVorticity::model_hash() const {
  std::string s = "vorticity:" + std::to_string(cutoff_) + ":" + fmt(eta_);
  for (const auto& [h, g] : forced_)
    s += ":" + std::to_string(half_[h][0]) + "," + std::to_string(half_[h][1]) + "," + fmt(g);
  return hash_params(s);
}

double GalerkinVorticity::stable_dt(Integrator integ) const {
  const double lam_max = *std::max_element(lambda_.begin(), lambda_.end());
  return integ == Integrator::EulerMaruyama ? 1.0 / lam_max
                                            : std::numeric_limits<double>::infinity();
}

std::unique_ptr<Stepper> GalerkinVorticity::make_stepper(double dt, Integrator integ) const {
  return std::make_unique<VorticityStepper>(*this, dt, integ);
}

}  // namespace wclt
