#include "perfdecon/io/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>

#include "perfdecon/error.hpp"
#include "perfdecon/perfusion.hpp"

namespace perfdecon::io {

namespace {

using nlohmann::json;
using signals::TimeSeries;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* extension_name(spectral::ExtensionMode mode) {
  return mode == spectral::ExtensionMode::EvenMirror ? "even" : "none";
}

json optional_number(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

double relative_error(double value, double truth) { return std::abs(value - truth) / std::abs(truth); }

json analysis_report(const perfusion::Analysis& a, const perfusion::DeconvConfig& cfg) {
  const auto& d = a.curves.diagnostics;
  json report;
  report["cbf"] = a.cbf;
  report["cbf_note"] = "cbf is the product CBF * rho; divide by tissue density for CBF";
  report["metrics_ok"] = a.metrics.has_value();
  report["mtt"] = a.metrics ? json(a.metrics->mtt) : json(nullptr);
  report["tth"] = a.metrics ? json(a.metrics->tth) : json(nullptr);
  if (a.metrics && a.metrics->raw_moments) {
    report["h_raw_moments"] = {{"order3", (*a.metrics->raw_moments)[0]},
                               {"order4", (*a.metrics->raw_moments)[1]}};
  } else {
    report["h_raw_moments"] = nullptr;
  }
  report["fit"] = a.fit ? json{{"K", a.fit->shape_k}, {"Q", a.fit->scale_q}} : json(nullptr);
  report["diagnostics"] = {
      {"k_roughness", d.k_roughness},
      {"roughness_threshold", cfg.roughness_threshold},
      {"reconstruction_ok", d.reconstruction_ok},
      {"reconvolution_residual", d.reconvolution_residual},
      {"imag_residue", d.imag_residue},
      {"reg", d.reg},
      {"cutoff_fraction", optional_number(d.cutoff_fraction)},
      {"extension", extension_name(d.extension)},
      {"tail_tolerance", cfg.tail_tolerance},
      {"metrics_error", d.metrics_error.empty() ? json(nullptr) : json(d.metrics_error)},
      {"fit_error", d.fit_error.empty() ? json(nullptr) : json(d.fit_error)},
  };
  return report;
}

// Periodic series of length 2n-2 laid out on t = -(n-1)dt .. (n-1)dt.
CurveRecord centered_record(const TimeSeries& like, std::size_t n) {
  const auto& g = like.grid();
  const signals::TimeGrid centered(g.t0() - static_cast<double>(n - 1) * g.dt(), g.dt(), 2 * n - 1);
  return CurveRecord::from_grid(centered);
}

std::vector<double> centered_values(const TimeSeries& ext, std::size_t n) {
  const long period = static_cast<long>(ext.size());
  std::vector<double> out;
  out.reserve(2 * n - 1);
  for (long m = -static_cast<long>(n - 1); m <= static_cast<long>(n - 1); ++m) {
    out.push_back(ext[static_cast<std::size_t>((m + period) % period)]);
  }
  return out;
}

struct NoisyInputs {
  TimeSeries c_a;
  TimeSeries c_t;
};

NoisyInputs noisy_inputs(const perfusion::SyntheticCurves& clean, double sigma, std::uint64_t seed) {
  const signals::NoiseSpec noise{sigma, seed};
  return {signals::add_noise(clean.c_a, arterial_noise(noise)),
          signals::add_noise(clean.c_t, tissue_noise(noise))};
}

class FigureWriter {
 public:
  FigureWriter(const PipelineConfig& config, std::filesystem::path dir)
      : config_(config), dir_(std::move(dir)) {}

  void write(std::vector<int> figures, const std::string& file, const CurveRecord& record,
             const std::string& description) {
    bool wanted = false;
    for (int f : figures) wanted = wanted || config_.wants_figure(f);
    if (!wanted) return;
    save_csv(record, dir_ / file);
    std::vector<std::string> columns{"t"};
    columns.insert(columns.end(), record.names().begin(), record.names().end());
    for (int f : figures) {
      if (config_.wants_figure(f)) entries_.push_back({f, file, columns, description});
    }
  }

  std::vector<FigureFile> finish() {
    std::sort(entries_.begin(), entries_.end(),
              [](const FigureFile& a, const FigureFile& b) { return a.figure < b.figure; });
    json manifest = json::array();
    for (const auto& e : entries_) {
      manifest.push_back({{"figure", e.figure},
                          {"file", e.file},
                          {"columns", e.columns},
                          {"description", e.description}});
    }
    save_json(json{{"figures", manifest}}, dir_ / "manifest.json");
    return entries_;
  }

 private:
  const PipelineConfig& config_;
  std::filesystem::path dir_;
  std::vector<FigureFile> entries_;
};

struct RunResult {
  double k_error = kNaN;
  double h_error = kNaN;
  double cbf_error = kNaN;
  double mtt_error = kNaN;
  double tth_error = kNaN;
  double fit_k_error = kNaN;
  double fit_q_error = kNaN;
  bool metrics_ok = false;
  bool fit_ok = false;
  bool flagged = true;
};

RunResult run_once(const PipelineConfig& config, const perfusion::SyntheticCurves& truth,
                   const perfusion::DeconvConfig& deconv, double sigma, std::uint64_t seed) {
  RunResult out;
  const NoisyInputs in = noisy_inputs(truth, sigma, seed);
  const perfusion::Analysis a = perfusion::analyze(in.c_a, in.c_t, deconv);
  out.k_error = signals::relative_l2_error(a.curves.k.values(), truth.k.values());
  out.h_error = signals::relative_l2_error(a.curves.h.values(), truth.h.values());
  out.cbf_error = relative_error(a.cbf, config.cbf_rho);
  out.flagged = !a.curves.diagnostics.reconstruction_ok;
  if (a.metrics) {
    out.metrics_ok = true;
    out.mtt_error = relative_error(a.metrics->mtt, config.impulse.mean());
    out.tth_error = relative_error(a.metrics->tth, config.impulse.variance());
  }
  if (a.fit) {
    out.fit_ok = true;
    out.fit_k_error = relative_error(a.fit->shape_k, config.impulse.shape_k);
    out.fit_q_error = relative_error(a.fit->scale_q, config.impulse.scale_q);
  }
  return out;
}

NoiseStudyRow aggregate(double sigma, bool filtered, const std::vector<RunResult>& runs) {
  const auto mean = [&](double RunResult::*field) {
    double sum = 0.0;
    int count = 0;
    for (const auto& r : runs) {
      if (std::isfinite(r.*field)) {
        sum += r.*field;
        ++count;
      }
    }
    return count > 0 ? sum / count : kNaN;
  };
  const auto max = [&](double RunResult::*field) {
    double m = kNaN;
    for (const auto& r : runs) {
      if (std::isfinite(r.*field) && !(m >= r.*field)) m = r.*field;
    }
    return m;
  };
  const auto fraction = [&](bool RunResult::*field) {
    int count = 0;
    for (const auto& r : runs) count += (r.*field) ? 1 : 0;
    return static_cast<double>(count) / static_cast<double>(runs.size());
  };
  return NoiseStudyRow{sigma,
                       filtered,
                       static_cast<int>(runs.size()),
                       mean(&RunResult::k_error),
                       max(&RunResult::k_error),
                       mean(&RunResult::h_error),
                       max(&RunResult::h_error),
                       mean(&RunResult::cbf_error),
                       mean(&RunResult::mtt_error),
                       mean(&RunResult::tth_error),
                       mean(&RunResult::fit_k_error),
                       mean(&RunResult::fit_q_error),
                       fraction(&RunResult::metrics_ok),
                       fraction(&RunResult::fit_ok),
                       fraction(&RunResult::flagged)};
}

}  // namespace

signals::NoiseSpec arterial_noise(const signals::NoiseSpec& noise) {
  return {noise.sigma, 2 * noise.seed};
}

signals::NoiseSpec tissue_noise(const signals::NoiseSpec& noise) {
  return {noise.sigma, 2 * noise.seed + 1};
}

CurveRecord cmd_synth(const PipelineConfig& config) {
  config.validate();
  const perfusion::SyntheticCurves clean = perfusion::synthesize(config.forward_model());
  const NoisyInputs in = noisy_inputs(clean, config.noise.sigma, config.noise.seed);
  CurveRecord record = CurveRecord::from_grid(config.grid);
  record.add("c_a", in.c_a);
  record.add("h_true", clean.h);
  record.add("r", clean.r);
  record.add("k_true", clean.k);
  record.add("c_ven", clean.c_ven);
  record.add("c_t", in.c_t);
  return record;
}

DeconvolveResult cmd_deconvolve(const CurveRecord& input, const PipelineConfig& config) {
  for (const char* name : {"c_a", "c_t"}) {
    if (!input.has(name)) throw IoError(std::string("input has no '") + name + "' column");
  }
  const TimeSeries c_a = input.series("c_a");
  const TimeSeries c_t = input.series("c_t");
  const perfusion::DeconvConfig deconv = config.deconv();
  const perfusion::Analysis a = perfusion::analyze(c_a, c_t, deconv);

  const std::vector<std::string> produced{"k_recovered", "r_recovered", "h_recovered", "k_unfiltered"};
  CurveRecord out(std::vector<double>(input.time().begin(), input.time().end()));
  for (const auto& name : input.names()) {
    if (std::find(produced.begin(), produced.end(), name) != produced.end()) continue;
    const auto col = input.column(name);
    out.add(name, std::vector<double>(col.begin(), col.end()));
  }
  out.add("k_recovered", a.curves.k);
  out.add("r_recovered", a.curves.r);
  out.add("h_recovered", a.curves.h);
  if (deconv.filter) out.add("k_unfiltered", a.curves.k_raw);

  json report = analysis_report(a, deconv);
  json reference = json::object();
  if (input.has("k_true")) {
    reference["k_relative_l2"] =
        signals::relative_l2_error(a.curves.k.values(), input.column("k_true"));
  }
  if (input.has("h_true")) {
    reference["h_relative_l2"] =
        signals::relative_l2_error(a.curves.h.values(), input.column("h_true"));
  }
  if (!reference.empty()) report["reference"] = reference;
  return DeconvolveResult{std::move(out), std::move(report), a.metrics.has_value()};
}

json cmd_metrics(const CurveRecord& input, const std::string& column, const PipelineConfig& config) {
  if (!input.has(column)) throw IoError("input has no '" + column + "' column");
  const TimeSeries k = input.series(column);
  const double cbf = perfusion::cbf_from_k(k);
  const double mtt = perfusion::mtt_from_k(k, cbf, config.tail_tolerance);
  const double tth = perfusion::tth_from_k(k, cbf, mtt, config.tail_tolerance);
  return json{{"column", column}, {"cbf", cbf}, {"mtt", mtt}, {"tth", tth}};
}

std::vector<FigureFile> cmd_figures(const PipelineConfig& config,
                                    const std::filesystem::path& out_dir) {
  config.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  const perfusion::SyntheticCurves clean = perfusion::synthesize(config.forward_model());
  const std::size_t n = config.grid.size();
  const spectral::FilterSpec cutoff(config.cutoff_fraction);
  FigureWriter w(config, out_dir);

  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("c_a", clean.c_a);
    r.add("h_true", clean.h);
    r.add("r", clean.r);
    r.add("c_ven", clean.c_ven);
    r.add("c_t", clean.c_t);
    w.write({21, 22, 26}, "fig21_construction.csv", r,
            "arterial input, transit-time density, residue, outlet and tissue curves");
  }
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("h_true", clean.h);
    r.add("h_normalized", signals::normalize_unit_peak(clean.h));
    w.write({23}, "fig23_impulse.csv", r, "transit-time density and its unit-peak normalization");
  }
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("r", clean.r);
    r.add("r_trapezoid", signals::residue_from_pdf(clean.h));
    r.add("k_true", clean.k);
    w.write({24}, "fig24_residue.csv", r,
            "residue function (analytic and trapezoidal) and weighted residue k");
  }
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("h_true", clean.h);
    r.add("h_recovered",
          signals::scale_by(signals::finite_diff_derivative(clean.r), -1.0));
    w.write({25}, "fig25_fd_recovery.csv", r,
            "transit-time density recovered as -dr/dt by second-order finite differences");
  }

  const TimeSeries k_clean = perfusion::recover_k(clean.c_a, clean.c_t, config.reg);
  const double cbf_clean = perfusion::cbf_from_k(k_clean);
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("k_true", clean.k);
    r.add("k_recovered", k_clean);
    r.add("r_recovered", signals::scale_by(k_clean, 1.0 / cbf_clean));
    w.write({27}, "fig27_recovered_residue.csv", r, "k recovered from noiseless C_a and C_t");
  }
  const TimeSeries k_ext = spectral::even_extension(k_clean);
  {
    CurveRecord r = centered_record(k_clean, n);
    r.add("k_even", centered_values(k_ext, n));
    w.write({28}, "fig28_even_extension.csv", r, "even extension of the recovered k");
  }
  {
    const TimeSeries dk = spectral::spectral_derivative(k_ext, spectral::ExtensionMode::None,
                                                        std::nullopt);
    CurveRecord r = centered_record(k_clean, n);
    r.add("k_even", centered_values(k_ext, n));
    r.add("h_mirrored", centered_values(signals::scale_by(dk, -1.0 / cbf_clean), n));
    w.write({30}, "fig30_mirrored_derivative.csv", r,
            "-(1/cbf) dk/dt of the even extension; t < 0 holds the mirrored image of h");
  }
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("h_true", clean.h);
    r.add("h_even", perfusion::recover_h(k_clean, cbf_clean, std::nullopt,
                                         spectral::ExtensionMode::EvenMirror));
    r.add("h_periodic",
          perfusion::recover_h(k_clean, cbf_clean, std::nullopt, spectral::ExtensionMode::None));
    w.write({31}, "fig31_no_extension.csv", r,
            "spectral derivative recovery of h with and without even extension");
  }

  const NoisyInputs noisy = noisy_inputs(clean, config.figures_sigma, config.noise.seed);
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("c_a", clean.c_a);
    r.add("c_t", clean.c_t);
    r.add("c_a_noisy", noisy.c_a);
    r.add("c_t_noisy", noisy.c_t);
    w.write({29}, "fig29_noisy_inputs.csv", r, "inputs with additive Gaussian noise");
  }
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("k_true", clean.k);
    r.add("k_recovered", perfusion::recover_k(noisy.c_a, noisy.c_t, config.reg));
    w.write({32}, "fig32_noisy_k.csv", r, "k recovered from noisy inputs without filtering");
  }

  const TimeSeries k_reg = perfusion::recover_k(noisy.c_a, noisy.c_t, config.filtered_reg);
  {
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("k_true", clean.k);
    r.add("k_regularized", k_reg);
    r.add("k_lowpass", spectral::low_pass_filter(k_reg, cutoff));
    r.add("k_even_lowpass",
          perfusion::smooth_residue(k_reg, cutoff, spectral::ExtensionMode::EvenMirror));
    w.write({33}, "fig33_lowpass_k.csv", r,
            "noisy k after brick-wall low-pass filtering; k_lowpass rings at the endpoints");
  }
  {
    perfusion::DeconvConfig deconv = config.deconv();
    deconv.reg = config.filtered_reg;
    deconv.filter = cutoff;
    const perfusion::Analysis a = perfusion::analyze(noisy.c_a, noisy.c_t, deconv);
    CurveRecord r = CurveRecord::from_grid(config.grid);
    r.add("h_true", clean.h);
    r.add("h_filtered", a.curves.h);
    if (a.fit) r.add("h_fitted", signals::gamma_pdf(*a.fit, config.grid));
    w.write({34}, "fig34_filtered_h.csv", r,
            "h from the filtered spectral derivative and its gamma variate fit");
  }
  return w.finish();
}

std::vector<NoiseStudyRow> cmd_noise_study(const PipelineConfig& config,
                                           const std::vector<double>& sigmas) {
  config.validate();
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("noise study: sigmas must be >= 0");
  }
  const perfusion::SyntheticCurves truth = perfusion::synthesize(config.forward_model());

  perfusion::DeconvConfig plain = config.deconv();
  plain.filter.reset();
  perfusion::DeconvConfig filtered = config.deconv();
  filtered.reg = config.filtered_reg;
  filtered.filter = spectral::FilterSpec(config.cutoff_fraction);

  std::vector<std::future<NoiseStudyRow>> cells;
  for (double sigma : sigmas) {
    for (const bool use_filter : {false, true}) {
      cells.push_back(std::async(std::launch::async, [&, sigma, use_filter] {
        std::vector<RunResult> runs;
        for (int i = 0; i < config.study_seeds; ++i) {
          const std::uint64_t seed = config.noise.seed + static_cast<std::uint64_t>(i);
          try {
            runs.push_back(run_once(config, truth, use_filter ? filtered : plain, sigma, seed));
          } catch (const NumericalError&) {
            runs.push_back(RunResult{});
          }
        }
        return aggregate(sigma, use_filter, runs);
      }));
    }
  }
  std::vector<NoiseStudyRow> rows;
  for (auto& cell : cells) rows.push_back(cell.get());
  return rows;
}

void write_noise_study(const std::vector<NoiseStudyRow>& rows, std::ostream& out) {
  out << "sigma,filtered,runs,k_error_mean,k_error_max,h_error_mean,h_error_max,"
         "cbf_error_mean,mtt_error_mean,tth_error_mean,fit_k_error_mean,fit_q_error_mean,"
         "metrics_ok_fraction,fit_ok_fraction,flagged_fraction\n";
  for (const auto& r : rows) {
    out << format_double(r.sigma) << ',' << (r.filtered ? 1 : 0) << ',' << r.runs;
    for (double v : {r.k_error_mean, r.k_error_max, r.h_error_mean, r.h_error_max,
                     r.cbf_error_mean, r.mtt_error_mean, r.tth_error_mean, r.fit_k_error_mean,
                     r.fit_q_error_mean, r.metrics_ok_fraction, r.fit_ok_fraction,
                     r.flagged_fraction}) {
      out << ',' << format_double(v);
    }
    out << '\n';
  }
}

void save_noise_study(const std::vector<NoiseStudyRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_noise_study(rows, out);
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

void save_json(const json& doc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace perfdecon::io
