#include "depthwatch/run_config.hpp"

#include <array>

#include "depthwatch/benchmarks.hpp"
#include "depthwatch/depth.hpp"
#include "depthwatch/errors.hpp"

namespace depthwatch {

bool is_depth_method(const std::string& method) {
  return DepthSpec::parse_method(method, 0).has_value();
}

bool is_benchmark_method(const std::string& method) {
  return benchmark_from_label(method).has_value();
}

bool is_scalar_method(const std::string& method) {
  return method == "mdis" || method == "nof";
}

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DataError("alpha must be in (0, 1), got " + std::to_string(alpha));
  }
  if (chart != "r" && chart != "q") {
    throw DataError("chart must be 'r' or 'q', got '" + chart + "'");
  }
  if (chart == "q" && batch_size < 2) {
    throw DataError("Q chart batch size must be >= 2");
  }
  if (reference != "confidence" && reference != "random" && reference != "merged") {
    throw DataError("reference must be confidence, random or merged; got '" + reference + "'");
  }
  if (ref_size < 1) throw DataError("reference size must be positive");
  if (!is_depth_method(method) && !is_benchmark_method(method)) {
    throw DataError("unknown method '" + method + "'");
  }
  if (kdeos_kernel != "gaussian" && kdeos_kernel != "epanechnikov") {
    throw DataError("kdeos kernel must be gaussian or epanechnikov");
  }
  if (restarts < 1 || max_iterations < 1 || !(convergence_tol > 0.0) || direction_budget < 0 ||
      lof_k < 1 || kdeos_k_min < 1 || kdeos_k_max < kdeos_k_min || iforest_trees < 1 ||
      iforest_subsample < 2) {
    throw DataError("method parameter out of range");
  }
}

nlohmann::json RunConfig::to_json() const {
  return nlohmann::json{
      {"input_path", input_path},
      {"out_dir", out_dir},
      {"method", method},
      {"alpha", alpha},
      {"chart", chart},
      {"batch_size", batch_size},
      {"reference", reference},
      {"ref_size", ref_size},
      {"seed", seed},
      {"ridge", ridge},
      {"phase1_loo", phase1_loo},
      {"svg", svg},
      {"restarts", restarts},
      {"max_iterations", max_iterations},
      {"convergence_tol", convergence_tol},
      {"direction_budget", direction_budget},
      {"lof_k", lof_k},
      {"kdeos_k_min", kdeos_k_min},
      {"kdeos_k_max", kdeos_k_max},
      {"kdeos_kernel", kdeos_kernel},
      {"iforest_trees", iforest_trees},
      {"iforest_subsample", iforest_subsample},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig config;
  try {
    j.at("input_path").get_to(config.input_path);
    j.at("out_dir").get_to(config.out_dir);
    j.at("method").get_to(config.method);
    j.at("alpha").get_to(config.alpha);
    j.at("chart").get_to(config.chart);
    j.at("batch_size").get_to(config.batch_size);
    j.at("reference").get_to(config.reference);
    j.at("ref_size").get_to(config.ref_size);
    j.at("seed").get_to(config.seed);
    j.at("ridge").get_to(config.ridge);
    j.at("phase1_loo").get_to(config.phase1_loo);
    j.at("svg").get_to(config.svg);
    j.at("restarts").get_to(config.restarts);
    j.at("max_iterations").get_to(config.max_iterations);
    j.at("convergence_tol").get_to(config.convergence_tol);
    j.at("direction_budget").get_to(config.direction_budget);
    j.at("lof_k").get_to(config.lof_k);
    j.at("kdeos_k_min").get_to(config.kdeos_k_min);
    j.at("kdeos_k_max").get_to(config.kdeos_k_max);
    j.at("kdeos_kernel").get_to(config.kdeos_kernel);
    j.at("iforest_trees").get_to(config.iforest_trees);
    j.at("iforest_subsample").get_to(config.iforest_subsample);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("config parse error: ") + e.what());
  }
  config.validate();
  return config;
}

std::string RunConfig::render() const { return to_json().dump(2); }

RunConfig RunConfig::parse(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw DataError("config is not valid JSON");
  return from_json(j);
}

}  // namespace depthwatch
