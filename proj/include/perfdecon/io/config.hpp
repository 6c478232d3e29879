#pragma once

// Pipeline configuration: a flat YAML mapping, one key per parameter.
//
//   t0, dt, n                    time grid (s, s, samples)      0, 0.05, 801
//   aif_shape, aif_scale         arterial gamma variate K, Q    3, 0.25
//   impulse_shape, impulse_scale transit-time gamma K, Q        10, 0.5
//   cbf_rho                      CBF * rho                      1
//   sigma, seed                  noise level and RNG seed       0, 42
//   reg                          Tikhonov weight                0
//   low_pass                     filter k and h                 false
//   cutoff_fraction              retained fraction of modes     0.05
//   extension                    even | none                    even
//   tail_tolerance               metric tail guard              1e-4
//   roughness_threshold          k quality flag                 2.0
//   outputs                      "all" or list of figures       all
//   study_sigmas                 noise-study levels             [0, 0.001, 0.003, 0.01]
//   study_seeds                  seeds per level                10
//   figures_sigma                noise for figures 29, 32-34    0.01
//   filtered_reg                 reg for filtered runs          0.01
//
// Unknown keys and ill-typed values raise ConfigError.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "perfdecon/perfusion.hpp"
#include "perfdecon/signals.hpp"
#include "perfdecon/spectral.hpp"

namespace perfdecon::io {

/// Figure numbers that cmd_figures can emit data for.
inline constexpr int kFirstFigure = 21;
inline constexpr int kLastFigure = 34;

struct PipelineConfig {
  signals::TimeGrid grid{0.0, 0.05, 801};
  signals::GammaParams aif{3.0, 0.25};
  signals::GammaParams impulse{10.0, 0.5};
  double cbf_rho = 1.0;
  signals::NoiseSpec noise{0.0, 42};
  double reg = 0.0;
  bool low_pass = false;
  double cutoff_fraction = 0.05;
  spectral::ExtensionMode extension = spectral::ExtensionMode::EvenMirror;
  double tail_tolerance = perfusion::kDefaultTailTolerance;
  double roughness_threshold = perfusion::kDefaultRoughnessThreshold;
  std::vector<int> outputs;  // figure numbers; empty means all
  std::vector<double> study_sigmas{0.0, 0.001, 0.003, 0.01};
  int study_seeds = 10;
  double figures_sigma = 0.01;
  double filtered_reg = 0.01;

  /// Throws ConfigError naming the first offending key.
  void validate() const;

  std::optional<spectral::FilterSpec> filter() const;
  perfusion::ForwardModelConfig forward_model() const;
  perfusion::DeconvConfig deconv() const;
  bool wants_figure(int figure) const;
};

PipelineConfig parse_config(const std::string& text, const std::string& source = "<config>");
PipelineConfig load_config(const std::filesystem::path& path);

}  // namespace perfdecon::io
