#include "wclt/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "wclt/errors.hpp"
#include "wclt/oracle.hpp"

namespace wclt {

namespace {

struct Value {
  enum Kind { Int, Real, Bool, Str, ArrInt, ArrReal } kind;
  long long i = 0;
  double r = 0.0;
  bool b = false;
  std::string s;
  std::vector<long long> ai;
  std::vector<double> ar;
};

const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Int: return "integer";
    case Value::Real: return "real";
    case Value::Bool: return "bool";
    case Value::Str: return "string";
    case Value::ArrInt: return "integer array";
    case Value::ArrReal: return "real array";
  }
  return "?";
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool is_integer_token(const std::string& t) {
  if (t.empty()) return false;
  std::size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
  if (i == t.size()) return false;
  for (; i < t.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
  return true;
}

Value parse_scalar(const std::string& tok, const std::string& where) {
  Value v;
  if (tok == "true" || tok == "false") {
    v.kind = Value::Bool;
    v.b = tok == "true";
    return v;
  }
  if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
    v.kind = Value::Str;
    v.s = tok.substr(1, tok.size() - 2);
    return v;
  }
  if (is_integer_token(tok)) {
    v.kind = Value::Int;
    v.i = std::stoll(tok);
    return v;
  }
  try {
    std::size_t pos = 0;
    v.r = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    v.kind = Value::Real;
    return v;
  } catch (...) {
    throw InvalidInput("config: " + where + ": cannot parse value '" + tok + "'");
  }
}

Value parse_value(const std::string& raw, const std::string& where) {
  const std::string t = trim(raw);
  if (t.empty()) throw InvalidInput("config: " + where + ": empty value");
  if (t.front() == '[') {
    if (t.back() != ']') throw InvalidInput("config: " + where + ": unterminated array");
    Value v;
    v.kind = Value::ArrInt;
    const std::string body = t.substr(1, t.size() - 2);
    std::stringstream ss(body);
    std::string item;
    bool all_int = true;
    std::vector<Value> items;
    while (std::getline(ss, item, ',')) {
      const std::string it = trim(item);
      if (it.empty()) continue;
      Value sv = parse_scalar(it, where);
      if (sv.kind != Value::Int && sv.kind != Value::Real)
        throw InvalidInput("config: " + where + ": arrays hold numbers only");
      if (sv.kind != Value::Int) all_int = false;
      items.push_back(sv);
    }
    if (all_int) {
      for (const auto& sv : items) {
        v.ai.push_back(sv.i);
        v.ar.push_back(static_cast<double>(sv.i));
      }
      v.kind = Value::ArrInt;
    } else {
      for (const auto& sv : items)
        v.ar.push_back(sv.kind == Value::Int ? static_cast<double>(sv.i) : sv.r);
      v.kind = Value::ArrReal;
    }
    return v;
  }
  return parse_scalar(t, where);
}

std::string canon_value(const Value& v) {
  char buf[64];
  switch (v.kind) {
    case Value::Int:
      std::snprintf(buf, sizeof buf, "%lld", v.i);
      return buf;
    case Value::Real:
      std::snprintf(buf, sizeof buf, "%.17g", v.r);
      return buf;
    case Value::Bool:
      return v.b ? "true" : "false";
    case Value::Str:
      return "\"" + v.s + "\"";
    case Value::ArrInt: {
      std::string out = "[";
      for (std::size_t k = 0; k < v.ai.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%lld", v.ai[k]);
        out += (k ? "," : "") + std::string(buf);
      }
      return out + "]";
    }
    case Value::ArrReal: {
      std::string out = "[";
      for (std::size_t k = 0; k < v.ar.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g", v.ar[k]);
        out += (k ? "," : "") + std::string(buf);
      }
      return out + "]";
    }
  }
  return "";
}

class KeyBag {
 public:
  void put(const std::string& section, const std::string& key, Value v,
           const std::string& where) {
    const std::string path = section + "." + key;
    if (vals_.count(path)) throw InvalidInput("config: duplicate key " + path);
    vals_.emplace(path, std::move(v));
    (void)where;
  }

  template <typename T>
  T take(const std::string& path, Value::Kind want, T def,
         const std::function<T(const Value&)>& get) {
    auto it = vals_.find(path);
    if (it == vals_.end()) return def;
    const Value& v = it->second;
    const bool num_ok = (want == Value::Real && v.kind == Value::Int) ||
                        (want == Value::ArrReal && v.kind == Value::ArrInt);
    if (v.kind != want && !num_ok)
      throw InvalidInput("config: " + path + ": expected " + kind_name(want) + ", got " +
                         kind_name(v.kind));
    T out = get(v);
    consumed_.insert(path);
    return out;
  }

  double real(const std::string& p, double def) {
    return take<double>(p, Value::Real, def, [](const Value& v) {
      return v.kind == Value::Int ? static_cast<double>(v.i) : v.r;
    });
  }
  long long integer(const std::string& p, long long def) {
    return take<long long>(p, Value::Int, def, [](const Value& v) { return v.i; });
  }
  bool boolean(const std::string& p, bool def) {
    return take<bool>(p, Value::Bool, def, [](const Value& v) { return v.b; });
  }
  std::string str(const std::string& p, std::string def) {
    return take<std::string>(p, Value::Str, std::move(def),
                             [](const Value& v) { return v.s; });
  }
  std::vector<double> arr_real(const std::string& p, std::vector<double> def) {
    return take<std::vector<double>>(p, Value::ArrReal, std::move(def),
                                     [](const Value& v) { return v.ar; });
  }
  std::vector<long long> arr_int(const std::string& p, std::vector<long long> def) {
    return take<std::vector<long long>>(p, Value::ArrInt, std::move(def),
                                        [](const Value& v) { return v.ai; });
  }
  bool has(const std::string& p) const { return vals_.count(p) > 0; }

  void reject_unconsumed() const {
    for (const auto& [path, v] : vals_) {
      (void)v;
      if (!consumed_.count(path))
        throw InvalidInput("config: unknown key " + path);
    }
  }

  std::string canonical() const {
    std::string out;
    for (const auto& [path, v] : vals_) out += path + "=" + canon_value(v) + "\n";
    return out;
  }

 private:
  std::map<std::string, Value> vals_;  // ordered: canonical form is sorted
  std::set<std::string> consumed_;
};

const std::set<std::string> kSections = {"model",    "observable", "run",    "hypotheses",
                                         "corrector", "martingale", "clt",   "output"};

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  KeyBag bag;
  std::string section;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments (# outside quotes)
    bool in_quote = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '"') in_quote = !in_quote;
      if (line[k] == '#' && !in_quote) {
        line = line.substr(0, k);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[' && t.back() == ']' && t.find('=') == std::string::npos) {
      section = trim(t.substr(1, t.size() - 2));
      if (!kSections.count(section))
        throw InvalidInput("config: unknown section [" + section + "] at line " +
                           std::to_string(lineno));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config: line " + std::to_string(lineno) +
                         ": expected 'key = value' or '[section]'");
    if (section.empty())
      throw InvalidInput("config: line " + std::to_string(lineno) +
                         ": key before any [section]");
    const std::string key = trim(t.substr(0, eq));
    const std::string where = section + "." + key;
    bag.put(section, key, parse_value(t.substr(eq + 1), where), where);
  }

  ExperimentConfig c;
  // --- model
  c.model.kind = bag.str("model.kind", "ou");
  c.model.theta = bag.real("model.theta", 1.0);
  c.model.noise_sigma = bag.real("model.noise_sigma", 1.0);
  c.model.dimension = static_cast<int>(bag.integer("model.dimension", 1));
  c.model.a_matrix = bag.arr_real("model.a_matrix", {});
  c.model.drift = bag.str("model.drift", "zero");
  c.model.drift_param = bag.real("model.drift_param", 0.0);
  c.model.gammas = bag.arr_real("model.gammas", {});
  c.model.q_inline = bag.arr_real("model.q_inline", {});
  c.model.n_states = static_cast<int>(bag.integer("model.n_states", 0));
  c.model.q_file = bag.str("model.q_file", "");
  c.model.distance = bag.str("model.distance", "uniform");
  c.model.mode_cutoff = static_cast<int>(bag.integer("model.mode_cutoff", 4));
  {
    const auto f = bag.arr_int("model.forcing", {});
    c.model.forcing.assign(f.begin(), f.end());
  }
  c.model.forcing_gammas = bag.arr_real("model.forcing_gammas", {});
  c.model.eta = bag.real("model.eta", 0.05);

  // --- observable
  c.observable.kind = bag.str("observable.kind", "coordinate");
  c.observable.index = static_cast<int>(bag.integer("observable.index", 0));
  c.observable.coeffs = bag.arr_real("observable.coeffs", {});
  c.observable.offset = bag.real("observable.offset", 0.0);
  if (bag.has("observable.lipschitz_bound"))
    c.observable.lipschitz_bound = bag.real("observable.lipschitz_bound", 0.0);

  // --- run
  c.run.seed = static_cast<std::uint64_t>(bag.integer("run.seed", 12345));
  c.run.n_paths = static_cast<int>(bag.integer("run.n_paths", 10000));
  c.run.dt = bag.real("run.dt", 0.0);
  c.run.t_max = bag.real("run.t_max", 100.0);
  c.run.record_dt = bag.real("run.record_dt", 1.0);
  c.run.integrator = bag.str("run.integrator", "exponential-euler");
  c.run.threads = static_cast<int>(bag.integer("run.threads", 0));
  c.run.initial = bag.arr_real("run.initial", {});

  // --- hypotheses
  c.hypotheses.enabled = bag.boolean("hypotheses.enabled", true);
  c.hypotheses.times = bag.arr_real("hypotheses.times", {});
  c.hypotheses.n_samples = static_cast<int>(bag.integer("hypotheses.n_samples", 512));
  c.hypotheses.coupled = bag.boolean("hypotheses.coupled", false);
  c.hypotheses.mu_point = bag.arr_real("hypotheses.mu_point", {});
  c.hypotheses.nu_point = bag.arr_real("hypotheses.nu_point", {});
  c.hypotheses.delta = bag.real("hypotheses.delta", 0.5);
  c.hypotheses.ball_radius = bag.real("hypotheses.ball_radius", 1.0);
  c.hypotheses.ball_points = static_cast<int>(bag.integer("hypotheses.ball_points", 8));
  c.hypotheses.moment_samples =
      static_cast<int>(bag.integer("hypotheses.moment_samples", 2000));
  c.hypotheses.continuity_times = bag.arr_real("hypotheses.continuity_times", {});

  // --- corrector
  c.corrector.enabled = bag.boolean("corrector.enabled", true);
  c.corrector.grid_lo = bag.real("corrector.grid_lo", -5.0);
  c.corrector.grid_hi = bag.real("corrector.grid_hi", 5.0);
  c.corrector.grid_n = static_cast<int>(bag.integer("corrector.grid_n", 33));
  c.corrector.tol = bag.real("corrector.tol", 0.02);
  c.corrector.n_paths = static_cast<int>(bag.integer("corrector.n_paths", 40000));
  c.corrector.dt = bag.real("corrector.dt", 0.0);
  c.corrector.double_horizon = bag.boolean("corrector.double_horizon", false);

  // --- martingale
  c.martingale.enabled = bag.boolean("martingale.enabled", true);
  c.martingale.n_time = static_cast<int>(bag.integer("martingale.n_time", 64));
  c.martingale.n_paths = static_cast<int>(bag.integer("martingale.n_paths", 4096));
  {
    const auto k = bag.arr_int("martingale.k_list", {2, 4, 8});
    c.martingale.k_list.assign(k.begin(), k.end());
  }
  c.martingale.n_inner = static_cast<int>(bag.integer("martingale.n_inner", 256));
  c.martingale.paths_sub = static_cast<int>(bag.integer("martingale.paths_sub", 32));
  c.martingale.test_states = static_cast<int>(bag.integer("martingale.test_states", 128));
  c.martingale.epsilon = bag.real("martingale.epsilon", 0.5);
  c.martingale.theta_grid = bag.arr_real("martingale.theta_grid", {});
  c.martingale.negative_control = bag.boolean("martingale.negative_control", true);
  c.martingale.r_t_list = bag.arr_real("martingale.r_t_list", {});

  // --- clt
  c.clt.enabled = bag.boolean("clt.enabled", true);
  c.clt.t_end = bag.real("clt.t_end", 200.0);
  c.clt.t_list = bag.arr_real("clt.t_list", {});
  c.clt.n_paths = static_cast<int>(bag.integer("clt.n_paths", 10000));
  c.clt.level = bag.real("clt.level", 0.01);
  c.clt.allowance = bag.real("clt.allowance", 0.2);
  c.clt.bootstrap_ks = bag.boolean("clt.bootstrap_ks", false);
  c.clt.n_bins = static_cast<int>(bag.integer("clt.n_bins", 40));
  c.clt.stationary_samples =
      static_cast<int>(bag.integer("clt.stationary_samples", 4096));
  c.clt.burn_tol = bag.real("clt.burn_tol", 0.05);

  // --- output
  c.output.out_dir = bag.str("output.out_dir", ".");
  c.output.emit_plots = bag.boolean("output.emit_plots", false);
  c.output.emit_csv = bag.boolean("output.emit_csv", true);
  c.output.write_ensemble = bag.boolean("output.write_ensemble", false);

  bag.reject_unconsumed();
  c.canonical_text = bag.canonical();
  c.config_hash = fnv1a64(c.canonical_text);

  // semantic validation that must happen at load time
  if (c.model.kind == "vorticity") {
    if (c.model.forcing.size() % 2 != 0)
      throw InvalidInput("config: model.forcing must hold (p1,p2) pairs");
    std::vector<std::array<int, 2>> modes;
    for (std::size_t k = 0; k + 1 < c.model.forcing.size(); k += 2)
      modes.push_back({c.model.forcing[k], c.model.forcing[k + 1]});
    const auto nd = check_noise_nondegeneracy(modes);
    if (!nd.ok) throw InvalidInput("config: model.forcing violates ND: " + nd.reason);
  }
  if (c.model.kind != "ou" && c.model.kind != "dissipative" && c.model.kind != "ctmc" &&
      c.model.kind != "vorticity")
    throw InvalidInput("config: model.kind must be ou|dissipative|ctmc|vorticity");
  if (!(c.run.n_paths > 0)) throw InvalidInput("config: run.n_paths must be positive");
  return c;
}

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// factories

std::unique_ptr<ProcessModel> build_model(const ModelConfig& mc) {
  if (mc.kind == "ou")
    return std::make_unique<OUProcess>(mc.theta, mc.noise_sigma, mc.dimension);
  if (mc.kind == "dissipative") {
    DriftKind dk = DriftKind::Zero;
    if (mc.drift == "sin") dk = DriftKind::SinCoordwise;
    else if (mc.drift == "tanh") dk = DriftKind::TanhCoordwise;
    else if (mc.drift != "zero")
      throw InvalidInput("config: model.drift must be zero|sin|tanh");
    std::vector<double> gam = mc.gammas;
    if (gam.empty()) gam.assign(static_cast<std::size_t>(mc.dimension), 1.0);
    return std::make_unique<DissipativeSDE>(mc.a_matrix, mc.dimension, dk, mc.drift_param,
                                            std::move(gam));
  }
  if (mc.kind == "ctmc") {
    std::vector<double> dist;
    auto make_dist = [&](int n) {
      dist.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          dist[static_cast<std::size_t>(i) * n + j] =
              mc.distance == "linear" ? std::abs(i - j) : (i == j ? 0.0 : 1.0);
    };
    if (!mc.q_file.empty()) {
      auto gen0 = GeneratorMatrix::from_file(mc.q_file);
      make_dist(gen0.n());
      return std::make_unique<CtmcProcess>(
          GeneratorMatrix(gen0.q_flat(), gen0.n(), std::move(dist)));
    }
    if (mc.n_states < 1 ||
        mc.q_inline.size() != static_cast<std::size_t>(mc.n_states) * mc.n_states)
      throw InvalidInput("config: model.q_inline must be n_states^2 reals");
    make_dist(mc.n_states);
    return std::make_unique<CtmcProcess>(
        GeneratorMatrix(mc.q_inline, mc.n_states, std::move(dist)));
  }
  // vorticity
  std::vector<std::array<int, 2>> modes;
  for (std::size_t k = 0; k + 1 < mc.forcing.size(); k += 2)
    modes.push_back({mc.forcing[k], mc.forcing[k + 1]});
  return std::make_unique<GalerkinVorticity>(mc.mode_cutoff, std::move(modes),
                                             mc.forcing_gammas, mc.eta);
}

Observable build_observable(const ObservableConfig& oc, const ProcessModel& model) {
  Observable obs;
  const int dim = model.dim();
  if (oc.kind == "coordinate") {
    const int idx = oc.index;
    if (idx < 0 || idx >= dim)
      throw InvalidInput("config: observable.index out of range");
    obs.name = "coordinate[" + std::to_string(idx) + "]";
    obs.eval = [idx](std::span<const double> x) { return x[static_cast<std::size_t>(idx)]; };
    obs.declared_lipschitz_bound = 1.0;
    if (model.space().kind() == MetricKind::WeightedNorm)
      obs.declared_lipschitz_bound = 1.0 / std::sqrt(2.0);  // field-L2 weighted metric
  } else if (oc.kind == "linear") {
    if (static_cast<int>(oc.coeffs.size()) != dim)
      throw InvalidInput("config: observable.coeffs must have one entry per coordinate");
    auto c = oc.coeffs;
    const double b = oc.offset;
    obs.name = "linear";
    obs.eval = [c, b](std::span<const double> x) {
      double s = b;
      for (std::size_t k = 0; k < c.size(); ++k) s += c[k] * x[k];
      return s;
    };
    double n2 = 0.0;
    for (double v : c) n2 += v * v;
    obs.declared_lipschitz_bound = std::sqrt(n2);
  } else if (oc.kind == "distance_to_ref") {
    const MetricSpace& sp = model.space();
    obs.name = "distance_to_ref";
    obs.eval = [&sp](std::span<const double> x) { return sp.distance_to_reference(x); };
    obs.declared_lipschitz_bound = 1.0;
  } else if (oc.kind == "table") {
    if (model.space().kind() != MetricKind::DiscreteTable)
      throw InvalidInput("config: table observable needs a discrete-state model");
    const int n = model.space().n_states();
    if (static_cast<int>(oc.coeffs.size()) != n)
      throw InvalidInput("config: observable.coeffs must assign one value per state");
    obs = table_observable(oc.coeffs, "table");
    double lip = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double d = model.space().table_at(i, j);
        if (d > 0)
          lip = std::max(lip, std::abs(oc.coeffs[static_cast<std::size_t>(i)] -
                                       oc.coeffs[static_cast<std::size_t>(j)]) /
                                  d);
      }
    obs.declared_lipschitz_bound = lip;
  } else {
    throw InvalidInput("config: observable.kind must be coordinate|linear|distance_to_ref|table");
  }
  if (oc.lipschitz_bound) obs.declared_lipschitz_bound = *oc.lipschitz_bound;
  return obs;
}

// ---------------------------------------------------------------------------
// presets

namespace {

const std::string kPresetOu = R"cfg(# OU closed-form pipeline: every stage has an analytic target
[model]
kind = "ou"
theta = 1.0
noise_sigma = 1.0
dimension = 1

[observable]
kind = "coordinate"
index = 0
lipschitz_bound = 1.0

[run]
seed = 20260808
n_paths = 10000
dt = 0.1
t_max = 200.0
record_dt = 1.0
integrator = "exponential-euler"

[hypotheses]
enabled = true
times = [0.0, 0.3, 0.6, 0.9, 1.2, 1.5, 1.8, 2.1, 2.4, 2.7, 3.0]
n_samples = 512
coupled = true
mu_point = [0.0]
nu_point = [1.0]
delta = 1.0
ball_radius = 1.0
ball_points = 6
moment_samples = 2000
continuity_times = [0.001, 0.004, 0.016, 0.064, 0.256]

[corrector]
enabled = true
grid_lo = -4.0
grid_hi = 4.0
grid_n = 17
tol = 0.015
n_paths = 60000
dt = 0.01

[martingale]
enabled = true
n_time = 64
n_paths = 10000
k_list = [2, 4, 8]
n_inner = 256
paths_sub = 32
test_states = 128
epsilon = 0.5
theta_grid = [-3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]
negative_control = true
r_t_list = [4.0, 16.0, 64.0]

[clt]
enabled = true
t_end = 200.0
t_list = [25.0, 50.0, 100.0, 200.0]
n_paths = 10000
level = 0.01
allowance = 0.2
stationary_samples = 4096
burn_tol = 0.05

[output]
emit_csv = true
)cfg";

const std::string kPresetCtmc = R"cfg(# 3-state uniformized ring: exact oracle for every estimator
[model]
kind = "ctmc"
n_states = 3
q_inline = [-1.0, 1.0, 0.0, 0.0, -1.0, 1.0, 1.0, 0.0, -1.0]
distance = "uniform"

[observable]
kind = "table"
coeffs = [1.0, 0.0, -1.0]

[run]
seed = 31337
n_paths = 10000
dt = 1.0
t_max = 500.0
record_dt = 1.0

[hypotheses]
enabled = true
times = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.2]
n_samples = 20000
coupled = false
mu_point = [0.0]
nu_point = [1.0]
delta = 0.5
ball_radius = 0.0
ball_points = 1
moment_samples = 4000
continuity_times = [0.0025, 0.01, 0.04, 0.16, 0.64]

[corrector]
enabled = true
tol = 0.02
n_paths = 4000

[martingale]
enabled = true
n_time = 64
n_paths = 8192
k_list = [2, 4, 8]
n_inner = 256
paths_sub = 32
test_states = 128
epsilon = 0.5
theta_grid = [-3.0, -2.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0]
negative_control = true
r_t_list = [4.0, 16.0, 64.0]

[clt]
enabled = true
t_end = 500.0
t_list = [50.0, 125.0, 250.0, 500.0]
n_paths = 10000
level = 0.01
allowance = 0.2
stationary_samples = 4096
burn_tol = 0.05

[output]
emit_csv = true
)cfg";

const std::string kPresetVorticity = R"cfg(# Galerkin vorticity truncation: structural property checks only
[model]
kind = "vorticity"
mode_cutoff = 4
forcing = [1, 0, 1, 1]
forcing_gammas = [1.0, 1.0]
eta = 0.05

[observable]
kind = "coordinate"
index = 0
lipschitz_bound = 0.7072

[run]
seed = 777
n_paths = 8
dt = 0.001
t_max = 20.0
record_dt = 0.5

[hypotheses]
enabled = false

[corrector]
enabled = false

[martingale]
enabled = false

[clt]
enabled = false

[output]
emit_csv = true
)cfg";

}  // namespace

const std::string& preset_text(const std::string& name) {
  if (name == "ou-closed-form") return kPresetOu;
  if (name == "ctmc-oracle") return kPresetCtmc;
  if (name == "galerkin-vorticity") return kPresetVorticity;
  throw InvalidInput("unknown preset '" + name +
                     "'; available: ou-closed-form, ctmc-oracle, galerkin-vorticity");
}

ExperimentConfig load_preset(const std::string& name) {
  return parse_config_text(preset_text(name));
}

std::vector<std::string> preset_names() {
  return {"ou-closed-form", "ctmc-oracle", "galerkin-vorticity"};
}

}  // namespace wclt
