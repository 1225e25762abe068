#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "depthwatch/benchmarks.hpp"
#include "depthwatch/charting.hpp"
#include "depthwatch/metrics.hpp"
#include "depthwatch/run_config.hpp"
#include "depthwatch/simulate.hpp"

namespace depthwatch {

struct MonitorResult {
  ChartConfig chart;
  std::vector<SignalRecord> signals;  // Phase I fold followed by the Phase II fold
  MonitoringReport report;
  std::size_t removed_phase1 = 0;
  bool any_ridged = false;
  int natural_k = 0;       // NOF only
  bool nof_capped = false;  // NOF only
};

// mdis and nof monitor the softmax score of the predicted class; the other
// methods monitor the embedding columns.
std::vector<EmbeddingRecord> feature_view(const std::vector<EmbeddingRecord>& records,
                                          const std::string& method);

// Phase I reference building + in-sample ranks + Phase II monitoring +
// metrics, all on in-memory records.
MonitorResult run_monitor(const RunConfig& config, const std::vector<EmbeddingRecord>& records);

nlohmann::json report_to_json(const MonitorResult& result, const RunConfig& config);

// Reads config.input_path and writes signals.csv, report.json and optionally
// chart.svg into config.out_dir.
MonitorResult run_monitor_files(const RunConfig& config);

struct ToyRunResult {
  int train_epochs = 0;
  std::vector<EmbeddingRecord> records;
  std::map<std::string, MonitorResult> by_method;
};

const std::vector<std::string>& all_method_labels();
const std::vector<std::string>& depth_method_labels();

// One-shot toy study: simulate -> train -> reference build -> monitor for
// each method. write_files controls the dataset/report/chart outputs.
ToyRunResult run_toy(std::uint64_t seed, const std::string& out_dir,
                     std::vector<std::string> methods, double alpha, const std::string& chart,
                     int batch_size, bool svg, bool write_files);

struct TimingRow {
  std::string method;
  std::size_t query_index = 0;
  std::size_t ref_size = 0;
  std::size_t dim = 0;
  std::int64_t nanos = 0;
};

struct TimingSummary {
  std::string method;
  std::size_t queries = 0;
  double min_ns = 0, median_ns = 0, mean_ns = 0, p95_ns = 0, max_ns = 0;
};

struct TimingResult {
  std::vector<TimingRow> rows;
  std::vector<TimingSummary> summary;
};

// Per-query wall time of the monitoring statistic for each method, evaluated
// on one worker so the durations stay comparable. Reference building and
// cache population are not timed.
TimingResult run_timing(const RunConfig& base, const std::vector<std::string>& methods,
                        const std::vector<EmbeddingRecord>& records);
TimingResult run_timing_files(const RunConfig& base, const std::vector<std::string>& methods);

// Monte Carlo study over fresh random reference samples; depth methods only.
StudySummary run_montecarlo(const RunConfig& base, int runs,
                            const std::vector<std::string>& methods,
                            const std::vector<EmbeddingRecord>& records);
StudySummary run_montecarlo_files(const RunConfig& base, int runs,
                                  const std::vector<std::string>& methods);

struct SimulateResult {
  int train_epochs = 0;
  double accuracy = 0.0;
};

// Generates the toy dataset, trains the toy net and writes the embedding CSV.
SimulateResult run_simulate_files(std::uint64_t seed, const std::string& out_path);

}  // namespace depthwatch
