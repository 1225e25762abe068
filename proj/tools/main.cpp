#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "depthwatch/csvio.hpp"
#include "depthwatch/errors.hpp"
#include "depthwatch/pipeline.hpp"

namespace {

using depthwatch::RunConfig;

void add_common_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--seed", config.seed, "Master RNG seed");
  cmd->add_option("--alpha", config.alpha, "False-alarm probability in (0, 1)")
      ->check(CLI::Range(1e-12, 1.0 - 1e-12));
  cmd->add_option("--chart", config.chart, "Chart type: r or q")
      ->check(CLI::IsMember({"r", "q"}));
  cmd->add_option("--n", config.batch_size, "Q chart batch size (n >= 2)");
  cmd->add_option("--reference", config.reference, "Reference strategy")
      ->check(CLI::IsMember({"confidence", "random", "merged"}));
  cmd->add_option("--size", config.ref_size, "Reference sample size |R|");
  cmd->add_option("--out", config.out_dir, "Output directory");
  cmd->add_flag("--ridge", config.ridge, "Regularize a singular covariance with a small ridge");
  cmd->add_flag("--phase1-loo", config.phase1_loo,
                "Leave-one-out ranks for the Phase I evaluation");
}

void add_method_options(CLI::App* cmd, RunConfig& config) {
  cmd->add_option("--restarts", config.restarts, "Optimizer restarts");
  cmd->add_option("--max-iterations", config.max_iterations, "Optimizer iteration cap");
  cmd->add_option("--tol", config.convergence_tol, "Optimizer convergence tolerance");
  cmd->add_option("--budget", config.direction_budget,
                  "Direction/evaluation budget (0 = method default)");
  cmd->add_option("--lof-k", config.lof_k, "LOF neighborhood size");
  cmd->add_option("--kdeos-kmin", config.kdeos_k_min, "KDEOS smallest neighborhood");
  cmd->add_option("--kdeos-kmax", config.kdeos_k_max, "KDEOS largest neighborhood");
  cmd->add_option("--kdeos-kernel", config.kdeos_kernel, "KDEOS kernel")
      ->check(CLI::IsMember({"gaussian", "epanechnikov"}));
  cmd->add_option("--iforest-trees", config.iforest_trees, "Isolation forest tree count");
  cmd->add_option("--iforest-subsample", config.iforest_subsample,
                  "Isolation forest subsample size");
}

std::vector<std::string> split_methods(const std::string& csv) {
  std::vector<std::string> out;
  std::string token;
  for (char ch : csv) {
    if (ch == ',') {
      if (!token.empty()) out.push_back(token);
      token.clear();
    } else {
      token += ch;
    }
  }
  if (!token.empty()) out.push_back(token);
  return out;
}

void print_report_line(const std::string& method, const depthwatch::MonitorResult& result) {
  std::cout << method << ": ";
  const auto& report = result.report;
  if (auto v = report.far()) std::cout << "FAR=" << depthwatch::format_double(*v) << " ";
  if (auto v = report.sr_weighted()) std::cout << "SR=" << depthwatch::format_double(*v) << " ";
  if (auto v = report.cdr()) std::cout << "CDR=" << depthwatch::format_double(*v);
  std::cout << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthwatch: data-depth control charts for embedding streams"};
  app.require_subcommand(1);

  RunConfig config;
  std::string method_csv;
  int mc_runs = 10;
  std::string simulate_out = "toy_dataset.csv";

  auto* toy = app.add_subcommand("toy", "Run the built-in toy study end to end");
  add_common_options(toy, config);
  add_method_options(toy, config);
  toy->add_option("--method", method_csv,
                  "Comma-separated methods (default: all depth + benchmark methods)");
  toy->add_flag("--svg", config.svg, "Render control charts");

  auto* monitor = app.add_subcommand("monitor", "Monitor an embedding CSV");
  monitor->add_option("--input", config.input_path, "Embedding CSV path")->required();
  monitor->add_option("--method", config.method, "Monitoring method")->required();
  add_common_options(monitor, config);
  add_method_options(monitor, config);
  monitor->add_flag("--svg", config.svg, "Render the control chart");

  auto* timing = app.add_subcommand("timing", "Per-query wall-clock comparison");
  timing->add_option("--input", config.input_path, "Embedding CSV path")->required();
  timing->add_option("--method", method_csv, "Comma-separated methods")->required();
  add_common_options(timing, config);
  add_method_options(timing, config);

  auto* montecarlo = app.add_subcommand("montecarlo",
                                        "Monte Carlo study over random reference samples");
  montecarlo->add_option("--input", config.input_path,
                         "Embedding CSV path (default: generate the toy stream)");
  montecarlo->add_option("--method", method_csv, "Comma-separated depth methods")->required();
  montecarlo->add_option("--runs", mc_runs, "Number of runs")->check(CLI::Range(2, 1000000));
  add_common_options(montecarlo, config);
  add_method_options(montecarlo, config);

  auto* simulate = app.add_subcommand("simulate", "Generate the toy embedding CSV");
  simulate->add_option("--seed", config.seed, "Master RNG seed");
  simulate->add_option("--out-file", simulate_out, "Output CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage errors map to exit code 1
  }

  try {
    if (toy->parsed()) {
      const auto methods = split_methods(method_csv);
      const auto result = depthwatch::run_toy(config.seed, config.out_dir, methods, config.alpha,
                                              config.chart, config.batch_size, config.svg, true);
      std::cout << "toy: trained to 100% in " << result.train_epochs << " epochs\n";
      for (const auto& [method, res] : result.by_method) print_report_line(method, res);
      std::cout << "outputs in " << config.out_dir << "\n";
    } else if (monitor->parsed()) {
      const auto result = depthwatch::run_monitor_files(config);
      print_report_line(config.method, result);
      std::cout << "outputs in " << config.out_dir << "\n";
    } else if (timing->parsed()) {
      const auto result = depthwatch::run_timing_files(config, split_methods(method_csv));
      for (const auto& s : result.summary) {
        std::cout << s.method << ": median " << depthwatch::format_double(s.median_ns / 1e6)
                  << " ms over " << s.queries << " queries\n";
      }
      std::cout << "outputs in " << config.out_dir << "\n";
    } else if (montecarlo->parsed()) {
      const auto summary =
          depthwatch::run_montecarlo_files(config, mc_runs, split_methods(method_csv));
      for (const auto& [method, metrics] : summary) {
        std::cout << method << ":";
        for (const auto& [metric, stats] : metrics) {
          std::cout << ' ' << metric << '=' << depthwatch::format_double(stats.mean) << "(sd "
                    << depthwatch::format_double(stats.stddev) << ')';
        }
        std::cout << "\n";
      }
      std::cout << "outputs in " << config.out_dir << "\n";
    } else if (simulate->parsed()) {
      const auto result = depthwatch::run_simulate_files(config.seed, simulate_out);
      std::cout << "simulate: trained to 100% in " << result.train_epochs << " epochs; wrote "
                << simulate_out << "\n";
    }
  } catch (const depthwatch::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const depthwatch::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
