#include "wclt/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "CLI11.hpp"

#include "wclt/errors.hpp"
#include "wclt/report.hpp"

namespace wclt {

namespace {

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

int effective_threads(int requested) {
#ifdef _OPENMP
  if (requested > 0) {
    omp_set_num_threads(requested);
    return requested;
  }
  return omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

struct CommonArgs {
  std::string config_path;
  std::string preset;
  std::string out_dir = ".";
  std::string corrector_file;
  std::int64_t seed = -1;
  int threads = 0;
  bool emit_plots = false;
};

ExperimentConfig resolve_config(const CommonArgs& a) {
  if (!a.preset.empty() && !a.config_path.empty())
    throw InvalidInput("give either --config or --preset, not both");
  ExperimentConfig cfg;
  if (!a.preset.empty())
    cfg = load_preset(a.preset);
  else if (!a.config_path.empty())
    cfg = parse_config(a.config_path);
  else
    throw InvalidInput("a config is required: --config FILE or --preset NAME");
  if (a.seed >= 0) cfg.run.seed = static_cast<std::uint64_t>(a.seed);
  if (a.threads > 0) cfg.run.threads = a.threads;
  if (!a.out_dir.empty()) cfg.output.out_dir = a.out_dir;
  if (a.emit_plots) cfg.output.emit_plots = true;
  return cfg;
}

void scope_stages(ExperimentConfig& cfg, const std::string& subcommand) {
  // each subcommand runs the prefix of the pipeline it needs
  if (subcommand == "simulate" || subcommand == "oracle") {
    cfg.hypotheses.enabled = false;
    cfg.corrector.enabled = false;
    cfg.martingale.enabled = false;
    cfg.clt.enabled = false;
  } else if (subcommand == "verify-hypotheses") {
    cfg.corrector.enabled = false;
    cfg.martingale.enabled = false;
    cfg.clt.enabled = false;
  } else if (subcommand == "corrector") {
    cfg.martingale.enabled = false;
    cfg.clt.enabled = false;
  } else if (subcommand == "martingale-diagnostics") {
    cfg.clt.enabled = false;
  }
  // "clt" and "full-report" run everything the config enables
}

int run_pipeline(const std::string& subcommand, const CommonArgs& args) {
  ExperimentConfig cfg = resolve_config(args);
  scope_stages(cfg, subcommand);
  const int threads = effective_threads(cfg.run.threads);
  std::filesystem::create_directories(cfg.output.out_dir);
  const auto dir = std::filesystem::path(cfg.output.out_dir);

  if (subcommand == "oracle" && cfg.model.kind != "ctmc")
    throw InvalidInput("oracle subcommand needs a ctmc model config");

  if (subcommand == "simulate") {
    const auto model = build_model(cfg.model);
    const Observable psi = build_observable(cfg.observable, *model);
    const double dtv = cfg.run.dt > 0 ? cfg.run.dt : model->default_dt();
    SimulateOptions so;
    so.accumulate = &psi;
    so.stream_tag = "main";
    const SimGrid grid = SimGrid::uniform(cfg.run.t_max, dtv, cfg.run.record_dt);
    const Point start = cfg.run.initial.empty()
                            ? Point(static_cast<std::size_t>(model->dim()), 0.0)
                            : Point(cfg.run.initial);
    const PathEnsemble ens =
        simulate_ensemble(*model, start, grid, cfg.run.n_paths,
                          cfg.run.seed ^ fnv1a64("main"),
                          integrator_from_string(cfg.run.integrator), so);
    write_ensemble((dir / "ensemble.bin").string(), ens);
    Json j;
    j["meta"] = {{"seed", cfg.run.seed},
                 {"config_hash", config_hash_hex(cfg.config_hash)},
                 {"generator", kGeneratorName},
                 {"threads", threads},
                 {"model", model->name()},
                 {"n_paths", ens.n_paths},
                 {"n_times", ens.n_times()}};
    atomic_write((dir / "simulate.json").string(), j.dump(2) + "\n");
    std::cout << "ensemble written to " << (dir / "ensemble.bin").string() << "\n";
    return 0;
  }

  PipelineOverrides overrides;
  const PipelineOverrides* ovp = nullptr;
  if (!args.corrector_file.empty()) {
    std::ifstream in(args.corrector_file);
    if (!in) throw InvalidInput("cannot open corrector file " + args.corrector_file);
    std::stringstream ss;
    ss << in.rdbuf();
    const auto j = nlohmann::json::parse(ss.str());
    if (j.contains("config_hash") &&
        j.at("config_hash").get<std::string>() != config_hash_hex(cfg.config_hash))
      throw InvalidInput("corrector file was produced under a different config");
    overrides.corrector = corrector_from_json(j.at("estimate").dump());
    ovp = &overrides;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const PipelineResult res = full_report(cfg, ovp);
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const Json report = report_json(res, cfg, threads, elapsed, iso_timestamp());
  atomic_write((dir / "report.json").string(), report.dump(2) + "\n");

  if (res.corrector) {
    Json cj;
    cj["config_hash"] = config_hash_hex(cfg.config_hash);
    cj["estimate"] = nlohmann::ordered_json::parse(corrector_to_json(*res.corrector));
    atomic_write((dir / "corrector.json").string(), cj.dump(2) + "\n");
  }
  if (cfg.output.emit_csv) {
    if (!res.variance.points.empty())
      atomic_write((dir / "variance_curve.csv").string(), variance_curve_csv(res.variance));
    if (res.clt)
      atomic_write((dir / "clt_hist.csv").string(), histogram_csv(res.clt->hist));
  }
  if (cfg.output.emit_plots && res.clt)
    atomic_write((dir / "clt_hist.gp").string(),
                 clt_plot_script(*res.clt, "clt_hist.csv"));

  for (const auto& c : res.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "  value=" << c.value
              << " threshold=" << c.threshold << "\n";
  std::cout << (res.all_pass ? "ALL CHECKS PASSED" : "CHECK FAILURES PRESENT") << "\n";
  return res.all_pass ? 0 : 2;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"wclt: Wasserstein-contraction LLN/CLT verification toolkit"};
  app.require_subcommand(1);

  CommonArgs common;
  app.add_option("--config", common.config_path, "experiment config file");
  app.add_option("--preset", common.preset,
                 "built-in preset: ou-closed-form | ctmc-oracle | galerkin-vorticity");
  app.add_option("--seed", common.seed, "override the master seed");
  app.add_option("--threads", common.threads, "cap worker threads (0 = all cores)");
  app.add_option("--out-dir", common.out_dir, "artifact directory");
  app.add_option("--corrector-file", common.corrector_file,
                 "reuse a persisted corrector estimate (corrector.json)");
  app.add_flag("--emit-plots", common.emit_plots, "write gnuplot scripts");

  const std::vector<std::string> subs = {"simulate",   "verify-hypotheses",
                                         "corrector",  "martingale-diagnostics",
                                         "clt",        "oracle",
                                         "full-report"};
  for (const auto& s : subs) app.add_subcommand(s)->fallthrough();

  // CLI11 wants argv-style reversed remaining args
  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::ostringstream os;
    const int code = app.exit(e, std::cout, std::cerr);
    return code == 0 ? 0 : 1;
  }
  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    return run_pipeline(sub, common);
  } catch (const CheckFailure& e) {
    std::cerr << "CHECK FAILURE [" << e.check_name << "]: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace wclt
