#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "wclt/measure.hpp"
#include "wclt/process.hpp"

namespace wclt {

struct ModelConfig {
  std::string kind = "ou";  // ou | dissipative | ctmc | vorticity
  // ou
  double theta = 1.0;
  double noise_sigma = 1.0;
  int dimension = 1;
  // dissipative
  std::vector<double> a_matrix;  // row-major dim x dim
  std::string drift = "zero";    // zero | sin | tanh
  double drift_param = 0.0;
  std::vector<double> gammas;
  // ctmc
  std::vector<double> q_inline;  // row-major n x n
  int n_states = 0;
  std::string q_file;
  std::string distance = "uniform";  // uniform | linear
  std::vector<double> psi_table;     // per-state observable values (ctmc)
  // vorticity
  int mode_cutoff = 4;
  std::vector<int> forcing;  // flattened (p1, p2) pairs, half-space reps
  std::vector<double> forcing_gammas;
  double eta = 0.05;
};

struct ObservableConfig {
  std::string kind = "coordinate";  // coordinate | linear | distance_to_ref | table
  int index = 0;
  std::vector<double> coeffs;
  double offset = 0.0;
  std::optional<double> lipschitz_bound;
};

struct RunConfig {
  std::uint64_t seed = 12345;
  int n_paths = 10000;
  double dt = 0.0;  // 0 -> model default
  double t_max = 100.0;
  double record_dt = 1.0;
  std::string integrator = "exponential-euler";
  int threads = 0;          // 0 -> all cores
  std::vector<double> initial;  // start point; empty -> model origin
};

struct HypothesesConfig {
  bool enabled = true;
  std::vector<double> times;
  int n_samples = 512;
  bool coupled = false;
  Point mu_point, nu_point;
  double delta = 0.5;
  double ball_radius = 1.0;
  int ball_points = 8;
  int moment_samples = 2000;
  std::vector<double> continuity_times;
};

struct CorrectorConfig {
  bool enabled = true;
  double grid_lo = -5.0, grid_hi = 5.0;
  int grid_n = 33;
  double tol = 0.02;
  int n_paths = 40000;
  double dt = 0.0;
  bool double_horizon = false;
};

struct MartingaleConfig {
  bool enabled = true;
  int n_time = 64;  // integer horizon N
  int n_paths = 4096;
  std::vector<int> k_list{2, 4, 8};
  int n_inner = 256;
  int paths_sub = 32;
  int test_states = 128;
  double epsilon = 0.5;
  std::vector<double> theta_grid;
  bool negative_control = true;
  std::vector<double> r_t_list;
};

struct CltConfig {
  bool enabled = true;
  double t_end = 200.0;
  std::vector<double> t_list;
  int n_paths = 10000;
  double level = 0.01;
  double allowance = 0.2;  // +20% on the KS critical value (estimated sigma)
  bool bootstrap_ks = false;
  int n_bins = 40;
  int stationary_samples = 4096;
  double burn_tol = 0.05;
};

struct OutputConfig {
  std::string out_dir = ".";
  bool emit_plots = false;
  bool emit_csv = true;
  bool write_ensemble = false;
};

struct ExperimentConfig {
  ModelConfig model;
  ObservableConfig observable;
  RunConfig run;
  HypothesesConfig hypotheses;
  CorrectorConfig corrector;
  MartingaleConfig martingale;
  CltConfig clt;
  OutputConfig output;
  std::uint64_t config_hash = 0;
  std::string canonical_text;
};

/// Parses the declarative config grammar: `[section]` headers and
/// `key = value` lines, where value is an int, real, bool, quoted string, or
/// inline array `[v1, v2, ...]`. Unknown sections/keys are rejected.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config(const std::string& path);

/// Shipped presets: ou-closed-form | ctmc-oracle | galerkin-vorticity.
const std::string& preset_text(const std::string& name);
ExperimentConfig load_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Model/observable factories from a validated config.
std::unique_ptr<ProcessModel> build_model(const ModelConfig& mc);
Observable build_observable(const ObservableConfig& oc, const ProcessModel& model);

std::string config_hash_hex(std::uint64_t h);

}  // namespace wclt
