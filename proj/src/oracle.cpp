#include "wclt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wclt/errors.hpp"
#include "wclt/wasserstein.hpp"

namespace wclt {

namespace {

// strongly connected components (iterative Tarjan) of the jump graph
std::vector<std::vector<int>> communicating_classes(const std::vector<double>& q, int n) {
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (i != j && q[static_cast<std::size_t>(i) * n + j] > 0.0)
        adj[static_cast<std::size_t>(i)].push_back(j);

  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  std::vector<std::vector<int>> sccs;
  int counter = 0;

  struct Frame {
    int v;
    std::size_t child;
  };
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      auto& fr = call.back();
      const auto& edges = adj[static_cast<std::size_t>(fr.v)];
      if (fr.child < edges.size()) {
        const int w = edges[fr.child++];
        if (index[static_cast<std::size_t>(w)] < 0) {
          index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = 1;
          call.push_back({w, 0});
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          low[static_cast<std::size_t>(fr.v)] =
              std::min(low[static_cast<std::size_t>(fr.v)], index[static_cast<std::size_t>(w)]);
        }
      } else {
        if (low[static_cast<std::size_t>(fr.v)] == index[static_cast<std::size_t>(fr.v)]) {
          std::vector<int> comp;
          for (;;) {
            const int w = stack.back();
            stack.pop_back();
            on_stack[static_cast<std::size_t>(w)] = 0;
            comp.push_back(w);
            if (w == fr.v) break;
          }
          std::sort(comp.begin(), comp.end());
          sccs.push_back(std::move(comp));
        }
        const int v = fr.v;
        call.pop_back();
        if (!call.empty())
          low[static_cast<std::size_t>(call.back().v)] =
              std::min(low[static_cast<std::size_t>(call.back().v)], low[static_cast<std::size_t>(v)]);
      }
    }
  }
  return sccs;
}

}  // namespace

GeneratorMatrix::GeneratorMatrix(std::vector<double> q_rowmajor, int n_states,
                                 std::vector<double> state_distances)
    : q_(std::move(q_rowmajor)), n_(n_states) {
  if (n_ < 1 || q_.size() != static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_))
    throw InvalidInput("GeneratorMatrix: Q must be n x n");
  for (int i = 0; i < n_; ++i) {
    double row = 0.0;
    for (int j = 0; j < n_; ++j) {
      const double v = q_[static_cast<std::size_t>(i) * n_ + j];
      if (i != j && v < 0.0)
        throw InvalidInput("GeneratorMatrix: negative off-diagonal rate at (" +
                           std::to_string(i) + "," + std::to_string(j) + ")");
      row += v;
    }
    if (std::abs(row) > 1e-12)
      throw InvalidInput("GeneratorMatrix: row " + std::to_string(i) +
                         " sums to " + std::to_string(row) + ", expected 0");
  }
  if (n_ > 1) {
    const auto classes = communicating_classes(q_, n_);
    if (classes.size() != 1) {
      std::string msg = "GeneratorMatrix: chain is reducible; communicating classes:";
      for (const auto& c : classes) {
        msg += " {";
        for (std::size_t k = 0; k < c.size(); ++k)
          msg += (k ? "," : "") + std::to_string(c[k]);
        msg += "}";
      }
      throw InvalidInput(msg);
    }
  }
  if (state_distances.empty()) {
    state_distances.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 1.0);
    for (int i = 0; i < n_; ++i) state_distances[static_cast<std::size_t>(i) * n_ + i] = 0.0;
  }
  space_ = MetricSpace::discrete(std::move(state_distances), n_);
}

GeneratorMatrix GeneratorMatrix::from_file(const std::string& path,
                                           std::vector<double> state_distances) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("GeneratorMatrix: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput("GeneratorMatrix: empty matrix file " + path);
  const int n = static_cast<int>(rows.size());
  std::vector<double> q;
  q.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (const auto& row : rows) {
    if (static_cast<int>(row.size()) != n)
      throw InvalidInput("GeneratorMatrix: ragged matrix file " + path);
    q.insert(q.end(), row.begin(), row.end());
  }
  return GeneratorMatrix(std::move(q), n, std::move(state_distances));
}

std::vector<double> stationary(const GeneratorMatrix& gen) {
  const int n = gen.n();
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gen.q(j, i);  // Q^T
  A.row(0).setOnes();  // normalization replaces one balance equation
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(0) = 1.0;
  const Eigen::VectorXd pi = A.fullPivLu().solve(b);
  // verify pi Q = 0
  double resid = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += pi(i) * gen.q(i, j);
    resid = std::max(resid, std::abs(s));
  }
  if (resid > 1e-10)
    throw NumericalError("stationary: pi Q residual " + std::to_string(resid));
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    if (pi(i) < -1e-12) throw NumericalError("stationary: negative mass in pi");
    out[static_cast<std::size_t>(i)] = std::max(pi(i), 0.0);
  }
  return out;
}

StationarySolution solve_poisson(const GeneratorMatrix& gen,
                                 const std::vector<double>& psi) {
  const int n = gen.n();
  if (static_cast<int>(psi.size()) != n)
    throw InvalidInput("solve_poisson: psi must assign one value per state");
  StationarySolution sol;
  sol.pi = stationary(gen);
  sol.v_star = 0.0;
  for (int i = 0; i < n; ++i) sol.v_star += sol.pi[static_cast<std::size_t>(i)] * psi[static_cast<std::size_t>(i)];

  // bordered system: [-Q, 1; pi^T, 0] [chi; lambda] = [psi - v*; 0]
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + 1, n + 1);
  Eigen::VectorXd b(n + 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) = -gen.q(i, j);
    A(i, n) = 1.0;
    A(n, i) = sol.pi[static_cast<std::size_t>(i)];
    b(i) = psi[static_cast<std::size_t>(i)] - sol.v_star;
  }
  b(n) = 0.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible())
    throw NumericalError("solve_poisson: bordered system singular (rcond ~ " +
                         std::to_string(lu.rcond()) + ")");
  Eigen::VectorXd sol_vec = lu.solve(b);
  // one step of iterative refinement
  sol_vec += lu.solve(b - A * sol_vec);
  sol.chi.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sol.chi[static_cast<std::size_t>(i)] = sol_vec(i);

  double resid = 0.0;
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += -gen.q(i, j) * sol.chi[static_cast<std::size_t>(j)];
    resid = std::max(resid, std::abs(s - (psi[static_cast<std::size_t>(i)] - sol.v_star)));
  }
  sol.poisson_residual_inf = resid;
  if (resid > 1e-10)
    throw NumericalError("solve_poisson: residual " + std::to_string(resid) +
                         " exceeds 1e-10");
  sol.sigma2_exact = exact_sigma2(sol, psi);
  return sol;
}

double exact_sigma2(const StationarySolution& sol, const std::vector<double>& psi) {
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i)
    s += sol.pi[i] * (psi[i] - sol.v_star) * sol.chi[i];
  s *= 2.0;
  if (s < -1e-10)
    throw NumericalError("exact_sigma2: negative value " + std::to_string(s) +
                         " signals an upstream solve failure");
  return std::max(s, 0.0);
}

std::vector<double> transition_matrix(const GeneratorMatrix& gen, double t) {
  const int n = gen.n();
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = gen.q(i, j);
  const Eigen::MatrixXd P = (t * Q).exp();
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] = P(i, j);
  return out;
}

double exact_marginal_d1(const GeneratorMatrix& gen, int from_a, int from_b, double t) {
  const int n = gen.n();
  const auto P = transition_matrix(gen, t);
  std::vector<double> atoms(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) atoms[static_cast<std::size_t>(s)] = s;
  std::vector<double> wa(P.begin() + static_cast<std::size_t>(from_a) * n,
                         P.begin() + static_cast<std::size_t>(from_a + 1) * n);
  std::vector<double> wb(P.begin() + static_cast<std::size_t>(from_b) * n,
                         P.begin() + static_cast<std::size_t>(from_b + 1) * n);
  auto renorm = [](std::vector<double>& w) {
    double s = 0.0;
    for (double& v : w) {
      v = std::max(v, 0.0);
      s += v;
    }
    for (double& v : w) v /= s;
  };
  renorm(wa);
  renorm(wb);
  const EmpiricalMeasure mu(std::vector<double>(atoms), 1, std::move(wa));
  const EmpiricalMeasure nu(std::vector<double>(atoms), 1, std::move(wb));
  return w1_finite_lp(mu, nu, gen.space()).value;
}

// ---------------------------------------------------------------------------
// Gillespie stepper

namespace {

class CtmcStepper final : public Stepper {
 public:
  explicit CtmcStepper(const GeneratorMatrix& gen) : gen_(gen) {}
  bool jump_model() const override { return true; }

  void step_window(std::span<double> x, double dt, SplitRng& rng, const Observable* psi,
                   double* acc) const override {
    int i = static_cast<int>(std::lround(x[0]));
    double t = 0.0;
    for (;;) {
      const double rate = -gen_.q(i, i);
      if (rate <= 1e-300) break;  // absorbing (excluded by irreducibility for n > 1)
      const double tau = rng.next_exponential(rate);
      if (t + tau >= dt) break;
      if (psi && acc) *acc += (*psi)(std::span<const double>{x.data(), 1}) * tau;
      t += tau;
      // inverse-cdf jump draw over Q_ij / rate
      const double u = rng.next_uniform() * rate;
      double cum = 0.0;
      int next = -1;
      for (int j = 0; j < gen_.n(); ++j) {
        if (j == i) continue;
        cum += gen_.q(i, j);
        if (u < cum) {
          next = j;
          break;
        }
      }
      i = next >= 0 ? next : i;
      x[0] = i;
    }
    if (psi && acc) *acc += (*psi)(std::span<const double>{x.data(), 1}) * (dt - t);
  }

 private:
  const GeneratorMatrix& gen_;
};

}  // namespace

CtmcProcess::CtmcProcess(GeneratorMatrix gen) : gen_(std::move(gen)) {}

std::uint64_t CtmcProcess::model_hash() const {
  std::string s = "ctmc:" + std::to_string(gen_.n());
  for (double v : gen_.q_flat()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, ":%.17g", v);
    s += buf;
  }
  return fnv1a64(s);
}

double CtmcProcess::stable_dt(Integrator) const {
  return std::numeric_limits<double>::infinity();
}

std::unique_ptr<Stepper> CtmcProcess::make_stepper(double, Integrator) const {
  return std::make_unique<CtmcStepper>(gen_);
}

PathEnsemble simulate_ctmc(const GeneratorMatrix& gen, const Initial& initial, double t_end,
                           double record_dt, int n_paths, std::uint64_t seed,
                           const Observable* psi) {
  if (!(t_end > 0)) throw InvalidInput("simulate_ctmc: T must be positive");
  CtmcProcess model(gen);
  SimulateOptions opts;
  opts.accumulate = psi;
  const SimGrid grid = SimGrid::uniform(t_end, record_dt, record_dt);
  return simulate_ensemble(model, initial, grid, n_paths, seed,
                           Integrator::ExponentialEuler, opts);
}

Observable table_observable(std::vector<double> values, std::string name) {
  auto tbl = std::make_shared<std::vector<double>>(std::move(values));
  Observable obs;
  obs.name = std::move(name);
  obs.eval = [tbl](std::span<const double> x) {
    const auto i = static_cast<std::size_t>(std::lround(x[0]));
    return (*tbl)[i];
  };
  return obs;
}

}  // namespace wclt
