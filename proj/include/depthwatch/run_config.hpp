#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

namespace depthwatch {

// Resolved parameters of one monitoring run. Canonical form is the JSON
// rendering; parse(render(config)) == config.
struct RunConfig {
  std::string input_path;
  std::string out_dir = ".";
  std::string method = "md";
  double alpha = 0.05;
  std::string chart = "r";  // "r" or "q"
  int batch_size = 5;       // Q chart only
  std::string reference = "confidence";  // confidence | random | merged
  std::uint64_t ref_size = 100;
  std::uint64_t seed = 0;
  bool ridge = false;
  bool phase1_loo = false;
  bool svg = false;

  // depth search parameters (0 direction_budget = method default)
  int restarts = 10;
  int max_iterations = 100;
  double convergence_tol = 1e-6;
  int direction_budget = 0;

  // benchmark parameters
  int lof_k = 20;
  int kdeos_k_min = 5;
  int kdeos_k_max = 20;
  std::string kdeos_kernel = "gaussian";  // gaussian | epanechnikov
  int iforest_trees = 100;
  int iforest_subsample = 256;

  bool operator==(const RunConfig&) const = default;

  // Throws DataError on out-of-range values or unknown tokens.
  void validate() const;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);

  std::string render() const;  // canonical text form
  static RunConfig parse(const std::string& text);
};

bool is_depth_method(const std::string& method);
bool is_benchmark_method(const std::string& method);
// mdis and nof monitor the scalar softmax stream instead of the embedding.
bool is_scalar_method(const std::string& method);

}  // namespace depthwatch
