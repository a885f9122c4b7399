#ifndef PCAMIL_CONFIG_HPP
#define PCAMIL_CONFIG_HPP

#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcamil/mil_net.hpp"
#include "pcamil/patch_scorer.hpp"
#include "pcamil/priors.hpp"

namespace pcamil {

enum class Method { Baseline, CIBaseline, CICRC, MILCRC, CIMILCRC };

inline constexpr std::array kAllMethods = {Method::Baseline, Method::CIBaseline, Method::CICRC, Method::MILCRC,
                                           Method::CIMILCRC};

inline constexpr std::string_view to_string(Method m) {
  switch (m) {
    case Method::Baseline: return "Baseline";
    case Method::CIBaseline: return "CI-Baseline";
    case Method::CICRC: return "CI-CRC";
    case Method::MILCRC: return "MIL-CRC";
    case Method::CIMILCRC: return "CIMIL-CRC";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  for (auto m : kAllMethods) {
    if (lowercase(to_string(m)) == lowercase(s)) return m;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown method '" + std::string(s) + "'");
}

struct ExperimentConfig {
  std::filesystem::path train_manifest;
  std::filesystem::path test_manifest;
  std::size_t n_folds = 5;
  std::size_t k_eigenvectors = 90;
  double alpha = 0.01;  // label smoothing for the MIL loss
  PriorConfig prior;
  MilConfig mil;
  PatchScorerConfig baseline;
  std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
  std::filesystem::path output_dir = "results";
  std::uint64_t seed = 0;
  double threshold = 0.5;
  std::size_t threads = 1;

  bool uses(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }
  bool needs_mil() const { return uses(Method::MILCRC) || uses(Method::CIMILCRC); }
  bool needs_baseline() const { return uses(Method::Baseline) || uses(Method::CIBaseline); }

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
    if (n_folds < 2) fail("n_folds must be >= 2");
    if (k_eigenvectors < 1) fail("k_eigenvectors must be >= 1");
    if (!(alpha >= 0.0 && alpha < 0.5)) fail("alpha must lie in [0, 0.5)");
    if (!(threshold >= 0.0 && threshold <= 1.0)) fail("threshold must lie in [0,1]");
    if (methods.empty()) fail("no methods selected");
    if (threads < 1) fail("threads must be >= 1");
    if (baseline.epochs < 1 || !(baseline.lr > 0.0)) fail("baseline epochs and lr must be positive");
    prior.validate();
    MilConfig m = mil;
    if (m.d_in == 0) m.d_in = 1;
    m.label_smoothing = alpha;
    m.validate();
  }
};

/// Fold parallelism cap from PCAMIL_THREADS (default 1).
inline std::size_t threads_from_env() {
  const char* v = std::getenv("PCAMIL_THREADS");
  if (v == nullptr || *v == '\0') return 1;
  char* end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (end == v || *end != '\0' || n < 1) throw Error(ErrorCode::InvalidConfig, "PCAMIL_THREADS must be a positive integer");
  return static_cast<std::size_t>(n);
}

namespace detail {

template <typename T>
void read_if(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["train_manifest"] = c.train_manifest.generic_string();
  j["test_manifest"] = c.test_manifest.generic_string();
  j["n_folds"] = c.n_folds;
  j["k_eigenvectors"] = c.k_eigenvectors;
  j["alpha"] = c.alpha;
  j["prior"] = {{"left_weight", c.prior.left_weight}, {"beta", c.prior.beta}};
  j["mil"] = {{"d_hidden", c.mil.d_hidden},
              {"d_att", c.mil.d_att},
              {"n_heads", c.mil.n_heads},
              {"feature_layers", c.mil.feature_layers},
              {"lr", c.mil.lr},
              {"beta1", c.mil.beta1},
              {"beta2", c.mil.beta2},
              {"adam_eps", c.mil.adam_eps},
              {"epochs", c.mil.epochs},
              {"instance_scaling", c.mil.scaling == InstanceScaling::Unit ? "unit" : "sqrt_eigenvalue"}};
  j["baseline"] = {{"epochs", c.baseline.epochs}, {"lr", c.baseline.lr}};
  auto methods = nlohmann::ordered_json::array();
  for (auto m : c.methods) methods.push_back(std::string(to_string(m)));
  j["methods"] = methods;
  j["output_dir"] = c.output_dir.generic_string();
  j["seed"] = c.seed;
  j["threshold"] = c.threshold;
  return j;
}

/// Overlays the fields present in `j` onto `c`.
inline void apply_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  std::string s;
  if (j.contains("train_manifest")) { detail::read_if(j, "train_manifest", s); c.train_manifest = s; }
  if (j.contains("test_manifest")) { detail::read_if(j, "test_manifest", s); c.test_manifest = s; }
  if (j.contains("output_dir")) { detail::read_if(j, "output_dir", s); c.output_dir = s; }
  detail::read_if(j, "n_folds", c.n_folds);
  detail::read_if(j, "k_eigenvectors", c.k_eigenvectors);
  detail::read_if(j, "alpha", c.alpha);
  detail::read_if(j, "seed", c.seed);
  detail::read_if(j, "threshold", c.threshold);
  if (j.contains("prior")) {
    const auto& p = j.at("prior");
    detail::read_if(p, "left_weight", c.prior.left_weight);
    detail::read_if(p, "beta", c.prior.beta);
  }
  if (j.contains("mil")) {
    const auto& m = j.at("mil");
    detail::read_if(m, "d_hidden", c.mil.d_hidden);
    detail::read_if(m, "d_att", c.mil.d_att);
    detail::read_if(m, "n_heads", c.mil.n_heads);
    detail::read_if(m, "feature_layers", c.mil.feature_layers);
    detail::read_if(m, "lr", c.mil.lr);
    detail::read_if(m, "beta1", c.mil.beta1);
    detail::read_if(m, "beta2", c.mil.beta2);
    detail::read_if(m, "adam_eps", c.mil.adam_eps);
    detail::read_if(m, "epochs", c.mil.epochs);
    if (m.contains("instance_scaling")) {
      std::string sc;
      detail::read_if(m, "instance_scaling", sc);
      if (sc == "unit") c.mil.scaling = InstanceScaling::Unit;
      else if (sc == "sqrt_eigenvalue") c.mil.scaling = InstanceScaling::SqrtEigenvalue;
      else throw Error(ErrorCode::InvalidConfig, "instance_scaling must be 'unit' or 'sqrt_eigenvalue'");
    }
  }
  if (j.contains("baseline")) {
    detail::read_if(j.at("baseline"), "epochs", c.baseline.epochs);
    detail::read_if(j.at("baseline"), "lr", c.baseline.lr);
  }
  if (j.contains("methods")) {
    std::vector<std::string> names;
    detail::read_if(j, "methods", names);
    c.methods.clear();
    for (const auto& n : names) c.methods.push_back(parse_method(n));
  }
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidConfig, "cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "config '" + path.string() + "': " + e.what());
  }
  ExperimentConfig c;
  apply_json(j, c);
  return c;
}

}  // namespace pcamil

#endif  // PCAMIL_CONFIG_HPP
