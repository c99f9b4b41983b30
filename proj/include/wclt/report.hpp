#pragma once

#include <string>

#include "json.hpp"

#include "wclt/config.hpp"
#include "wclt/harness.hpp"

namespace wclt {

using Json = nlohmann::ordered_json;

/// Stable-keyed report; wall-clock metadata lives under meta.timestamp and
/// meta.elapsed_seconds only.
Json report_json(const PipelineResult& res, const ExperimentConfig& cfg, int threads,
                 double elapsed_seconds, const std::string& timestamp);

/// Refuses to combine reports whose meta.config_hash differ.
Json merge_reports(const Json& a, const Json& b);

/// Write-temp-then-rename; the destination never holds a partial file.
void atomic_write(const std::string& path, const std::string& bytes);

/// RFC-4180 CSV (CRLF line endings, quoted fields where needed).
std::string to_csv(const std::vector<std::vector<std::string>>& rows);

std::string variance_curve_csv(const VarianceCurve& vc);
std::string histogram_csv(const Histogram& h);

/// gnuplot-dialect script for the CLT histogram against the normal density.
std::string clt_plot_script(const CltOutcome& clt, const std::string& csv_name);

/// Versioned binary ensemble cache ("WCLTENS1"): header, grid, path-major
/// float64 states, optional integrals.
void write_ensemble(const std::string& path, const PathEnsemble& ens);
PathEnsemble read_ensemble(const std::string& path);

}  // namespace wclt
