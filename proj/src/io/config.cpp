#include "perfdecon/io/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "perfdecon/error.hpp"

namespace perfdecon::io {

namespace {

template <typename T>
T scalar(const YAML::Node& node, const std::string& key, const std::string& source) {
  if (!node.IsScalar()) throw ConfigError(source + ": '" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(source + ": '" + key + "' has an invalid value '" + node.Scalar() + "'");
  }
}

template <typename T>
std::vector<T> list(const YAML::Node& node, const std::string& key, const std::string& source) {
  if (!node.IsSequence()) throw ConfigError(source + ": '" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : node) out.push_back(scalar<T>(item, key, source));
  return out;
}

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

void PipelineConfig::validate() const {
  require(grid.size() >= 4, "n must be >= 4");
  require(std::isfinite(cbf_rho) && cbf_rho > 0.0, "cbf_rho must be > 0");
  require(std::isfinite(noise.sigma) && noise.sigma >= 0.0, "sigma must be >= 0");
  require(std::isfinite(reg) && reg >= 0.0, "reg must be >= 0");
  require(cutoff_fraction > 0.0 && cutoff_fraction <= 1.0, "cutoff_fraction must lie in (0, 1]");
  require(tail_tolerance > 0.0 && tail_tolerance < 1.0, "tail_tolerance must lie in (0, 1)");
  require(roughness_threshold >= 1.0, "roughness_threshold must be >= 1");
  for (int f : outputs) {
    require(f >= kFirstFigure && f <= kLastFigure,
            "outputs: figure " + std::to_string(f) + " is not in 21..34");
  }
  require(!study_sigmas.empty(), "study_sigmas must not be empty");
  for (double s : study_sigmas) require(std::isfinite(s) && s >= 0.0, "study_sigmas must be >= 0");
  require(study_seeds >= 1, "study_seeds must be >= 1");
  require(std::isfinite(figures_sigma) && figures_sigma >= 0.0, "figures_sigma must be >= 0");
  require(std::isfinite(filtered_reg) && filtered_reg >= 0.0, "filtered_reg must be >= 0");
}

std::optional<spectral::FilterSpec> PipelineConfig::filter() const {
  if (!low_pass) return std::nullopt;
  return spectral::FilterSpec(cutoff_fraction);
}

perfusion::ForwardModelConfig PipelineConfig::forward_model() const {
  return perfusion::ForwardModelConfig{cbf_rho, aif, impulse, grid};
}

perfusion::DeconvConfig PipelineConfig::deconv() const {
  return perfusion::DeconvConfig{reg, filter(), extension, tail_tolerance, roughness_threshold};
}

bool PipelineConfig::wants_figure(int figure) const {
  return outputs.empty() || std::find(outputs.begin(), outputs.end(), figure) != outputs.end();
}

PipelineConfig parse_config(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  PipelineConfig cfg;
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError(source + ": expected a key-value mapping");

  double t0 = cfg.grid.t0();
  double dt = cfg.grid.dt();
  long long n = static_cast<long long>(cfg.grid.size());
  double aif_k = cfg.aif.shape_k;
  double aif_q = cfg.aif.scale_q;
  double imp_k = cfg.impulse.shape_k;
  double imp_q = cfg.impulse.scale_q;
  long long seed = static_cast<long long>(cfg.noise.seed);

  using Setter = std::function<void(const YAML::Node&, const std::string&)>;
  const auto num = [&](double& dst) -> Setter {
    return [&](const YAML::Node& v, const std::string& k) { dst = scalar<double>(v, k, source); };
  };
  const std::map<std::string, Setter> keys = {
      {"t0", num(t0)},
      {"dt", num(dt)},
      {"n", [&](const YAML::Node& v, const std::string& k) { n = scalar<long long>(v, k, source); }},
      {"aif_shape", num(aif_k)},
      {"aif_scale", num(aif_q)},
      {"impulse_shape", num(imp_k)},
      {"impulse_scale", num(imp_q)},
      {"cbf_rho", num(cfg.cbf_rho)},
      {"sigma", num(cfg.noise.sigma)},
      {"seed",
       [&](const YAML::Node& v, const std::string& k) { seed = scalar<long long>(v, k, source); }},
      {"reg", num(cfg.reg)},
      {"low_pass",
       [&](const YAML::Node& v, const std::string& k) { cfg.low_pass = scalar<bool>(v, k, source); }},
      {"cutoff_fraction", num(cfg.cutoff_fraction)},
      {"extension",
       [&](const YAML::Node& v, const std::string& k) {
         const auto s = scalar<std::string>(v, k, source);
         if (s == "even") {
           cfg.extension = spectral::ExtensionMode::EvenMirror;
         } else if (s == "none") {
           cfg.extension = spectral::ExtensionMode::None;
         } else {
           throw ConfigError(source + ": extension must be 'even' or 'none', got '" + s + "'");
         }
       }},
      {"tail_tolerance", num(cfg.tail_tolerance)},
      {"roughness_threshold", num(cfg.roughness_threshold)},
      {"outputs",
       [&](const YAML::Node& v, const std::string& k) {
         if (v.IsScalar() && v.Scalar() == "all") {
           cfg.outputs.clear();
         } else {
           cfg.outputs = list<int>(v, k, source);
         }
       }},
      {"study_sigmas",
       [&](const YAML::Node& v, const std::string& k) { cfg.study_sigmas = list<double>(v, k, source); }},
      {"study_seeds",
       [&](const YAML::Node& v, const std::string& k) { cfg.study_seeds = scalar<int>(v, k, source); }},
      {"figures_sigma", num(cfg.figures_sigma)},
      {"filtered_reg", num(cfg.filtered_reg)},
  };

  for (const auto& entry : root) {
    const auto key = entry.first.as<std::string>();
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(source + ": unknown key '" + key + "'");
    it->second(entry.second, key);
  }

  if (n < 4) throw ConfigError(source + ": n must be >= 4");
  if (seed < 0) throw ConfigError(source + ": seed must be >= 0");
  try {
    cfg.grid = signals::TimeGrid(t0, dt, static_cast<std::size_t>(n));
    cfg.aif = signals::GammaParams(aif_k, aif_q);
    cfg.impulse = signals::GammaParams(imp_k, imp_q);
  } catch (const InvalidArgument& e) {
    throw ConfigError(source + ": " + e.what());
  }
  cfg.noise.seed = static_cast<std::uint64_t>(seed);
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

}  // namespace perfdecon::io
