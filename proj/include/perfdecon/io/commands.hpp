#pragma once

// Subcommand implementations behind the perfdecon CLI. Each is deterministic
// given (config, seed).

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "perfdecon/io/config.hpp"
#include "perfdecon/io/csv.hpp"

namespace perfdecon::io {

/// Noise for C_a and C_t is drawn from independent streams derived from
/// config.noise.seed, so the two curves never share a realization.
signals::NoiseSpec arterial_noise(const signals::NoiseSpec& noise);
signals::NoiseSpec tissue_noise(const signals::NoiseSpec& noise);

/// Columns t, c_a, h_true, r, k_true, c_ven, c_t. c_a and c_t carry noise
/// when config.noise.sigma > 0.
CurveRecord cmd_synth(const PipelineConfig& config);

struct DeconvolveResult {
  CurveRecord curves;     // input columns plus k_recovered, r_recovered, h_recovered
  nlohmann::json report;  // metrics, fit and diagnostics
  bool metrics_ok;        // false when the tail guard rejected mtt/tth
};

/// Needs columns c_a and c_t. When the input also carries k_true / h_true the
/// report includes the relative L2 error against them.
DeconvolveResult cmd_deconvolve(const CurveRecord& input, const PipelineConfig& config);

/// cbf, mtt and tth of an existing k column.
nlohmann::json cmd_metrics(const CurveRecord& input, const std::string& column,
                           const PipelineConfig& config);

struct FigureFile {
  int figure;
  std::string file;
  std::vector<std::string> columns;
  std::string description;
};

/// Writes one CSV per figure into out_dir plus manifest.json, and returns the
/// manifest entries (figure number -> file). IoError when out_dir is not
/// writable.
std::vector<FigureFile> cmd_figures(const PipelineConfig& config,
                                    const std::filesystem::path& out_dir);

/// Aggregate over seeds for one (sigma, filtered) cell of the noise study.
/// Errors are relative; metric and fit errors average only the runs where
/// the metric or fit succeeded (NaN when none did).
struct NoiseStudyRow {
  double sigma;
  bool filtered;
  int runs;
  double k_error_mean;
  double k_error_max;
  double h_error_mean;
  double h_error_max;
  double cbf_error_mean;
  double mtt_error_mean;
  double tth_error_mean;
  double fit_k_error_mean;
  double fit_q_error_mean;
  double metrics_ok_fraction;
  double fit_ok_fraction;
  double flagged_fraction;  // runs whose k failed the roughness check
};

/// For each sigma, runs study_seeds pipelines without filtering (reg from the
/// config) and with filtering (filtered_reg, cutoff_fraction). Runs execute
/// in parallel.
std::vector<NoiseStudyRow> cmd_noise_study(const PipelineConfig& config,
                                           const std::vector<double>& sigmas);

void write_noise_study(const std::vector<NoiseStudyRow>& rows, std::ostream& out);
void save_noise_study(const std::vector<NoiseStudyRow>& rows, const std::filesystem::path& path);

void save_json(const nlohmann::json& doc, const std::filesystem::path& path);

}  // namespace perfdecon::io
