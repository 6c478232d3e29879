// perfdecon: synthesize, deconvolve and analyse tracer-kinetic curves.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 numerical failure
// (ill-posed deconvolution, undecayed tail), 4 I/O error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "perfdecon/error.hpp"
#include "perfdecon/io/commands.hpp"
#include "perfdecon/io/config.hpp"
#include "perfdecon/io/csv.hpp"

namespace fs = std::filesystem;
using namespace perfdecon;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::int64_t> seed;
  std::string input;
  std::string column = "k_recovered";
  std::vector<double> sigmas;
};

io::PipelineConfig resolve_config(const Options& opt) {
  io::PipelineConfig cfg = opt.config_path.empty() ? io::PipelineConfig{} : io::load_config(opt.config_path);
  if (opt.seed) {
    if (*opt.seed < 0) throw ConfigError("--seed must be >= 0");
    cfg.noise.seed = static_cast<std::uint64_t>(*opt.seed);
  }
  return cfg;
}

fs::path prepare_out(const Options& opt) {
  const fs::path out(opt.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
  return out;
}

int run_synth(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const fs::path path = prepare_out(opt) / "synth.csv";
  io::save_csv(io::cmd_synth(cfg), path);
  std::cout << "wrote " << path.string() << '\n';
  return 0;
}

int run_deconvolve(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const auto input = io::load_csv(opt.input);
  const auto result = io::cmd_deconvolve(input, cfg);
  const fs::path out = prepare_out(opt);
  io::save_csv(result.curves, out / "deconvolved.csv");
  io::save_json(result.report, out / "report.json");
  std::cout << result.report.dump(2) << '\n';
  if (!result.metrics_ok) {
    std::cerr << "error: " << result.report["diagnostics"]["metrics_error"].get<std::string>()
              << '\n';
    return kExitNumerical;
  }
  return 0;
}

int run_figures(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const auto entries = io::cmd_figures(cfg, opt.out_dir);
  for (const auto& e : entries) std::cout << "figure " << e.figure << ": " << e.file << '\n';
  return 0;
}

int run_noise_study(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const auto rows = io::cmd_noise_study(cfg, opt.sigmas.empty() ? cfg.study_sigmas : opt.sigmas);
  const fs::path path = prepare_out(opt) / "noise_study.csv";
  io::save_noise_study(rows, path);
  io::write_noise_study(rows, std::cout);
  return 0;
}

int run_metrics(const Options& opt) {
  const auto cfg = resolve_config(opt);
  const auto report = io::cmd_metrics(io::load_csv(opt.input), opt.column, cfg);
  io::save_json(report, prepare_out(opt) / "metrics.json");
  std::cout << report.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fourier deconvolution of tracer-kinetic perfusion curves"};
  app.require_subcommand(1);

  Options opt;
  app.add_option("--config", opt.config_path, "YAML config file (flat key: value)")
      ->check(CLI::ExistingFile);
  app.add_option("--out", opt.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", opt.seed, "noise seed, overrides the config");

  auto* synth = app.add_subcommand("synth", "write synthetic C_a, h, r, k, C_ven, C_t to synth.csv");
  auto* deconv = app.add_subcommand("deconvolve", "recover k, r, h and metrics from c_a/c_t columns");
  deconv->add_option("--input", opt.input, "CSV with t, c_a, c_t columns")->required();
  auto* figures = app.add_subcommand("figures", "write per-figure CSVs and manifest.json");
  auto* study = app.add_subcommand("noise-study", "error statistics over noise levels and seeds");
  study->add_option("--sigmas", opt.sigmas, "noise levels, overrides study_sigmas")->delimiter(',');
  auto* metrics = app.add_subcommand("metrics", "cbf, mtt and tth of a k column");
  metrics->add_option("--input", opt.input, "CSV with a k column")->required();
  metrics->add_option("--column", opt.column, "k column name")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*synth) return run_synth(opt);
    if (*deconv) return run_deconvolve(opt);
    if (*figures) return run_figures(opt);
    if (*study) return run_noise_study(opt);
    if (*metrics) return run_metrics(opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
