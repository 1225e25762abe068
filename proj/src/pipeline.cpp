#include "depthwatch/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>

#include "depthwatch/csvio.hpp"
#include "depthwatch/errors.hpp"
#include "depthwatch/reference.hpp"
#include "depthwatch/stats.hpp"
#include "depthwatch/svg.hpp"

namespace depthwatch {

namespace {

// Everything needed to rank one query: either a depth spec with populated
// caches or a fitted scorer per reference set.
struct PreparedMethod {
  bool depth_based = true;
  DepthSpec spec;
  std::map<int, ReferenceSet> refs;
  std::map<int, CentralityScorer> scorers;
  bool any_ridged = false;
  int natural_k = 0;
  bool nof_capped = false;
};

DepthSpec spec_from_config(const RunConfig& config) {
  auto spec = DepthSpec::parse_method(config.method, config.seed);
  if (!spec) throw DataError("unknown depth method '" + config.method + "'");
  spec->restarts = config.restarts;
  spec->max_iterations = config.max_iterations;
  spec->convergence_tol = config.convergence_tol;
  if (config.direction_budget > 0) spec->direction_budget = config.direction_budget;
  spec->validate();
  return *spec;
}

BenchmarkParams params_from_config(const RunConfig& config) {
  BenchmarkParams params;
  params.lof_k = config.lof_k;
  params.kdeos_k_min = config.kdeos_k_min;
  params.kdeos_k_max = config.kdeos_k_max;
  params.kdeos_kernel = config.kdeos_kernel == "epanechnikov" ? KdeosKernel::Epanechnikov
                                                              : KdeosKernel::Gaussian;
  params.iforest_trees = config.iforest_trees;
  params.iforest_subsample = config.iforest_subsample;
  params.seed = config.seed;
  return params;
}

std::map<int, ReferenceSet> build_reference_sets(const RunConfig& config,
                                                 const std::vector<EmbeddingRecord>& validated) {
  std::map<int, ReferenceSet> refs;
  if (config.reference == "merged") {
    refs.emplace(kMergedClass, build_reference_merged(validated, config.ref_size, config.ridge));
    return refs;
  }
  for (int label : class_labels(validated)) {
    if (config.reference == "confidence") {
      refs.emplace(label, build_reference_by_confidence(validated, label, config.ref_size,
                                                        config.ridge));
    } else {
      refs.emplace(label, build_reference_random(validated, label, config.ref_size, config.seed,
                                                 config.ridge));
    }
  }
  return refs;
}

PreparedMethod prepare_method(const RunConfig& config,
                              const std::vector<EmbeddingRecord>& validated) {
  PreparedMethod prepared;
  prepared.refs = build_reference_sets(config, validated);
  for (const auto& [label, ref] : prepared.refs) {
    prepared.any_ridged = prepared.any_ridged || ref.ridged();
  }
  prepared.depth_based = is_depth_method(config.method);
  if (prepared.depth_based) {
    prepared.spec = spec_from_config(config);
    for (auto& [label, ref] : prepared.refs) populate_depth_cache(ref, prepared.spec);
  } else {
    const auto method = benchmark_from_label(config.method);
    const BenchmarkParams params = params_from_config(config);
    for (auto& [label, ref] : prepared.refs) {
      auto scorer = CentralityScorer::fit(*method, ref, params);
      if (*method == BenchmarkMethod::NOF) {
        prepared.natural_k = std::max(prepared.natural_k, scorer.natural_k());
        prepared.nof_capped = prepared.nof_capped || scorer.natural_capped();
      }
      prepared.scorers.emplace(label, std::move(scorer));
    }
  }
  return prepared;
}

// Phase I evaluation: each reference row ranked within its own set (the row
// counts itself unless leave-one-out is requested), folded in stream order.
std::vector<SignalRecord> phase1_signals(const PreparedMethod& prepared,
                                         const ChartConfig& chart, bool leave_one_out) {
  std::vector<RankedObs> observations;
  auto rank_rows = [&](int label, const std::vector<double>& values,
                       const std::vector<std::size_t>& sources) {
    const double n = static_cast<double>(values.size());
    for (std::size_t row = 0; row < values.size(); ++row) {
      double r = r_statistic(values[row], values);
      if (leave_one_out) r = (r * n - 1.0) / (n - 1.0);
      const std::size_t index = sources.empty() ? row : sources[row];
      observations.push_back({index, label, r, Phase::PhaseI});
    }
  };
  if (prepared.depth_based) {
    const std::string key = prepared.spec.cache_key();
    for (const auto& [label, ref] : prepared.refs) {
      rank_rows(label, *ref.cached_depths(key), ref.source_indices());
    }
  } else {
    for (const auto& [label, scorer] : prepared.scorers) {
      rank_rows(label, scorer.in_sample_centralities(),
                prepared.refs.at(label).source_indices());
    }
  }
  std::sort(observations.begin(), observations.end(),
            [](const RankedObs& a, const RankedObs& b) { return a.index < b.index; });
  return fold_ranked_stream(observations, chart);
}

std::vector<SignalRecord> phase2_signals(const PreparedMethod& prepared,
                                         const std::vector<EmbeddingRecord>& stream,
                                         const ChartConfig& chart) {
  if (prepared.depth_based) {
    return monitor_stream(stream, prepared.refs, prepared.spec, chart);
  }
  std::vector<RankedObs> observations(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const EmbeddingRecord& rec = stream[i];
    auto it = prepared.scorers.find(rec.predicted_label);
    if (it == prepared.scorers.end()) it = prepared.scorers.find(kMergedClass);
    if (it == prepared.scorers.end()) {
      throw DataError("no reference set for predicted class " +
                      class_token(rec.predicted_label) + " and no merged fallback");
    }
    const double centrality = it->second.centrality(rec.embedding);
    const double r = r_statistic(centrality, it->second.in_sample_centralities());
    observations[i] = {rec.index, it->first == kMergedClass ? kMergedClass : rec.predicted_label,
                       r, rec.phase};
  }
  return fold_ranked_stream(observations, chart);
}

nlohmann::json cell_to_json(const RateCell& cell) {
  nlohmann::json j{{"count", cell.count}, {"signals", cell.signals}};
  if (const auto rate = cell.rate()) j["rate"] = *rate;
  return j;
}

}  // namespace

std::vector<EmbeddingRecord> feature_view(const std::vector<EmbeddingRecord>& records,
                                          const std::string& method) {
  if (!is_scalar_method(method)) return records;
  std::vector<EmbeddingRecord> out = records;
  for (auto& rec : out) {
    if (!rec.softmax.has_value()) {
      throw DataError("record " + std::to_string(rec.index) + ": method '" + method +
                      "' monitors the softmax stream but the record has no softmax scores");
    }
    const Eigen::VectorXd& sm = *rec.softmax;
    if (rec.predicted_label < 1 || rec.predicted_label > sm.size()) {
      throw DataError("record " + std::to_string(rec.index) + ": predicted class " +
                      std::to_string(rec.predicted_label) + " has no softmax column");
    }
    Eigen::VectorXd scalar(1);
    scalar << sm(rec.predicted_label - 1);
    rec.embedding = scalar;
  }
  return out;
}

MonitorResult run_monitor(const RunConfig& config, const std::vector<EmbeddingRecord>& records) {
  config.validate();
  MonitorResult result;
  result.chart = make_chart_config(config.chart == "q" ? ChartKind::Q : ChartKind::R,
                                   config.alpha, config.batch_size);

  std::vector<EmbeddingRecord> phase1_raw, stream_raw;
  for (const auto& rec : records) {
    (rec.phase == Phase::PhaseI ? phase1_raw : stream_raw).push_back(rec);
  }
  if (phase1_raw.empty()) throw DataError("no Phase I records in the input");
  auto validation = validate_phase1(phase1_raw);
  result.removed_phase1 = validation.removed;
  if (validation.kept.empty()) {
    throw DataError("every Phase I record was misclassified; nothing to build references from");
  }

  const auto phase1_view = feature_view(validation.kept, config.method);
  const auto stream_view = feature_view(stream_raw, config.method);

  const PreparedMethod prepared = prepare_method(config, phase1_view);
  result.any_ridged = prepared.any_ridged;
  result.natural_k = prepared.natural_k;
  result.nof_capped = prepared.nof_capped;

  result.signals = phase1_signals(prepared, result.chart, config.phase1_loo);
  const auto phase2 = phase2_signals(prepared, stream_view, result.chart);
  result.signals.insert(result.signals.end(), phase2.begin(), phase2.end());

  if (result.chart.chart == ChartKind::R) {
    // Mask aligned with the in-control subsequence: the R chart emits one
    // record per observation, so the record order carries over.
    std::vector<bool> mask;
    bool any_true_label = false;
    for (const auto& rec : stream_view) {
      if (rec.phase != Phase::PhaseII_InControl) continue;
      mask.push_back(rec.misclassified());
      any_true_label = any_true_label || rec.true_label.has_value();
    }
    result.report = build_report(result.signals, (any_true_label && !mask.empty()) ? &mask : nullptr);
  } else {
    result.report = build_report(result.signals);
  }
  return result;
}

nlohmann::json report_to_json(const MonitorResult& result, const RunConfig& config) {
  const MonitoringReport& report = result.report;
  nlohmann::json j;
  j["config"] = config.to_json();
  j["chart"] = {{"kind", result.chart.chart == ChartKind::R ? "r" : "q"},
                {"alpha", result.chart.alpha},
                {"batch_size", result.chart.batch_size},
                {"lcl", result.chart.lcl}};
  j["phase1"] = cell_to_json(report.phase1);
  j["phase1"]["removed_misclassified"] = result.removed_phase1;
  j["phase2_in_control"] = cell_to_json(report.phase2_in_control);
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [label, cell] : report.sr_per_class) {
    per_class[class_token(label)] = cell_to_json(cell);
  }
  j["phase2_in_control"]["per_class"] = per_class;
  if (report.misclassified.count > 0 || report.correctly_classified.count > 0) {
    j["phase2_in_control"]["given_misclassified"] = cell_to_json(report.misclassified);
    j["phase2_in_control"]["given_correct"] = cell_to_json(report.correctly_classified);
  }
  j["phase2_out_of_control"] = cell_to_json(report.phase2_out_of_control);
  nlohmann::json flags = nlohmann::json::object();
  if (result.any_ridged) flags["ridged_covariance"] = true;
  if (config.method == "nof") {
    flags["natural_k"] = result.natural_k;
    flags["natural_k_capped"] = result.nof_capped;
  }
  j["flags"] = flags;
  return j;
}

MonitorResult run_monitor_files(const RunConfig& config) {
  const auto parsed = parse_embeddings_csv_file(config.input_path);
  MonitorResult result = run_monitor(config, parsed.records);

  std::filesystem::create_directories(config.out_dir);
  write_signals_csv_file(config.out_dir + "/signals.csv", result.signals);
  {
    std::ofstream out(config.out_dir + "/report.json");
    if (!out) throw DataError("cannot write report.json in " + config.out_dir);
    out << report_to_json(result, config).dump(2) << "\n";
  }
  if (config.svg) {
    std::map<std::size_t, bool> misclassified;
    for (const auto& rec : parsed.records) {
      if (rec.phase == Phase::PhaseII_InControl && rec.misclassified()) {
        misclassified[rec.index] = true;
      }
    }
    std::ofstream out(config.out_dir + "/chart.svg");
    if (!out) throw DataError("cannot write chart.svg in " + config.out_dir);
    out << render_control_chart(result.signals, result.chart, misclassified,
                                config.method + " control chart");
  }
  return result;
}

const std::vector<std::string>& all_method_labels() {
  static const std::vector<std::string> labels = {
      "md", "sd", "hdr", "pd1a", "pd2a", "pd3a", "pd1", "pd2", "pd3",
      "lof", "kdeos", "iforest", "mdis", "nof"};
  return labels;
}

const std::vector<std::string>& depth_method_labels() {
  static const std::vector<std::string> labels = {
      "md", "sd", "hdr", "pd1a", "pd2a", "pd3a", "pd1", "pd2", "pd3"};
  return labels;
}

ToyRunResult run_toy(std::uint64_t seed, const std::string& out_dir,
                     std::vector<std::string> methods, double alpha, const std::string& chart,
                     int batch_size, bool svg, bool write_files) {
  if (methods.empty()) methods = all_method_labels();

  const ToyData data = gen_toy_data(seed);
  TinyFnn fnn = make_fnn({7, 5, 3, 1}, 2, seed);
  const TrainResult trained = train_fnn(fnn, data.train_x, data.train_y, 2000, 0.05);

  ToyRunResult result;
  result.train_epochs = trained.epochs;
  result.records = toy_records(data, fnn);

  if (write_files) {
    std::filesystem::create_directories(out_dir);
    write_embeddings_csv_file(out_dir + "/toy_dataset.csv", result.records, 2, 3);
  }

  nlohmann::json summary;
  summary["seed"] = seed;
  summary["train_epochs"] = trained.epochs;
  for (const auto& method : methods) {
    RunConfig config;
    config.method = method;
    config.alpha = alpha;
    config.chart = chart;
    config.batch_size = batch_size;
    config.reference = "confidence";
    config.ref_size = 100;
    config.seed = seed;
    config.svg = svg;
    config.out_dir = out_dir;
    MonitorResult res = run_monitor(config, result.records);

    if (write_files) {
      write_signals_csv_file(out_dir + "/signals_" + method + ".csv", res.signals);
      std::ofstream rep(out_dir + "/report_" + method + ".json");
      rep << report_to_json(res, config).dump(2) << "\n";
      if (svg) {
        std::map<std::size_t, bool> misclassified;
        for (const auto& rec : result.records) {
          if (rec.phase == Phase::PhaseII_InControl && rec.misclassified()) {
            misclassified[rec.index] = true;
          }
        }
        std::ofstream chart_out(out_dir + "/chart_" + method + ".svg");
        chart_out << render_control_chart(res.signals, res.chart, misclassified,
                                          method + " control chart (toy)");
      }
    }
    nlohmann::json row;
    if (auto v = res.report.far()) row["far"] = *v;
    if (auto v = res.report.sr_weighted()) row["sr"] = *v;
    if (auto v = res.report.cdr()) row["cdr"] = *v;
    summary["methods"][method] = row;

    result.by_method.emplace(method, std::move(res));
  }
  if (write_files) {
    std::ofstream out(out_dir + "/toy_summary.json");
    out << summary.dump(2) << "\n";
  }
  return result;
}

TimingResult run_timing(const RunConfig& base, const std::vector<std::string>& methods,
                        const std::vector<EmbeddingRecord>& records) {
  if (methods.empty()) throw DataError("timing needs at least one method");
  std::vector<EmbeddingRecord> phase1_raw, stream_raw;
  for (const auto& rec : records) {
    (rec.phase == Phase::PhaseI ? phase1_raw : stream_raw).push_back(rec);
  }
  const auto validation = validate_phase1(phase1_raw);

  TimingResult result;
  for (const auto& method : methods) {
    RunConfig config = base;
    config.method = method;
    config.validate();
    const auto phase1_view = feature_view(validation.kept, method);
    const auto stream_view = feature_view(stream_raw, method);
    const PreparedMethod prepared = prepare_method(config, phase1_view);

    std::vector<double> durations;
    for (const auto& rec : stream_view) {
      if (rec.phase == Phase::PhaseI) continue;
      const ReferenceSet* ref = nullptr;
      const CentralityScorer* scorer = nullptr;
      if (prepared.depth_based) {
        auto it = prepared.refs.find(rec.predicted_label);
        if (it == prepared.refs.end()) it = prepared.refs.find(kMergedClass);
        if (it == prepared.refs.end()) continue;
        ref = &it->second;
      } else {
        auto it = prepared.scorers.find(rec.predicted_label);
        if (it == prepared.scorers.end()) it = prepared.scorers.find(kMergedClass);
        if (it == prepared.scorers.end()) continue;
        scorer = &it->second;
        ref = &prepared.refs.at(it->first);
      }
      const auto start = std::chrono::steady_clock::now();
      volatile double value;
      if (prepared.depth_based) {
        value = depth(rec.embedding, *ref, prepared.spec, salt_for_query(rec.index));
      } else {
        value = scorer->centrality(rec.embedding);
      }
      (void)value;
      const auto stop = std::chrono::steady_clock::now();
      const auto nanos =
          std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count();
      result.rows.push_back({method, rec.index, ref->size(), ref->dim(), nanos});
      durations.push_back(static_cast<double>(nanos));
    }
    if (!durations.empty()) {
      TimingSummary summary;
      summary.method = method;
      summary.queries = durations.size();
      summary.min_ns = *std::min_element(durations.begin(), durations.end());
      summary.max_ns = *std::max_element(durations.begin(), durations.end());
      summary.median_ns = median(durations);
      summary.mean_ns = mean(durations);
      summary.p95_ns = quantile(durations, 0.95);
      result.summary.push_back(summary);
    }
  }
  return result;
}

TimingResult run_timing_files(const RunConfig& base, const std::vector<std::string>& methods) {
  const auto parsed = parse_embeddings_csv_file(base.input_path);
  TimingResult result = run_timing(base, methods, parsed.records);

  std::filesystem::create_directories(base.out_dir);
  {
    std::ofstream out(base.out_dir + "/timing.csv");
    if (!out) throw DataError("cannot write timing.csv in " + base.out_dir);
    out << "method,query_index,ref_size,dim,nanos\n";
    for (const auto& row : result.rows) {
      out << row.method << ',' << row.query_index << ',' << row.ref_size << ',' << row.dim << ','
          << row.nanos << "\n";
    }
  }
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : result.summary) {
    j.push_back({{"method", s.method},
                 {"queries", s.queries},
                 {"min_ns", s.min_ns},
                 {"median_ns", s.median_ns},
                 {"mean_ns", s.mean_ns},
                 {"p95_ns", s.p95_ns},
                 {"max_ns", s.max_ns}});
  }
  std::ofstream out(base.out_dir + "/timing_summary.json");
  out << j.dump(2) << "\n";
  return result;
}

StudySummary run_montecarlo(const RunConfig& base, int runs,
                            const std::vector<std::string>& methods,
                            const std::vector<EmbeddingRecord>& records) {
  if (runs < 2) throw DataError("montecarlo needs at least two runs");
  std::vector<DepthSpec> specs;
  for (const auto& method : methods) {
    RunConfig config = base;
    config.method = method;
    if (!is_depth_method(method)) {
      throw DataError("montecarlo supports depth methods only; got '" + method + "'");
    }
    specs.push_back(spec_from_config(config));
  }
  const ChartConfig chart = make_chart_config(base.chart == "q" ? ChartKind::Q : ChartKind::R,
                                              base.alpha, base.batch_size);
  std::vector<std::uint64_t> run_seeds;
  run_seeds.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    run_seeds.push_back(derive_seed(base.seed, seed_tag::kMonteCarloRun,
                                    static_cast<std::uint64_t>(r)));
  }
  return monte_carlo_study(records, base.ref_size, specs, chart, run_seeds);
}

StudySummary run_montecarlo_files(const RunConfig& base, int runs,
                                  const std::vector<std::string>& methods) {
  std::vector<EmbeddingRecord> records;
  if (!base.input_path.empty()) {
    records = parse_embeddings_csv_file(base.input_path).records;
  } else {
    // No input: run the study on a fresh toy stream.
    ToyRunResult toy = run_toy(base.seed, base.out_dir, {"md"}, base.alpha, "r", 5, false, false);
    records = std::move(toy.records);
  }
  const StudySummary summary = run_montecarlo(base, runs, methods, records);

  std::filesystem::create_directories(base.out_dir);
  nlohmann::json j;
  j["runs"] = runs;
  j["ref_size"] = base.ref_size;
  for (const auto& [method, metrics] : summary) {
    for (const auto& [metric, stats] : metrics) {
      j["results"][method][metric] = {{"mean", stats.mean}, {"stddev", stats.stddev}};
    }
  }
  std::ofstream out(base.out_dir + "/montecarlo.json");
  if (!out) throw DataError("cannot write montecarlo.json in " + base.out_dir);
  out << j.dump(2) << "\n";
  return summary;
}

SimulateResult run_simulate_files(std::uint64_t seed, const std::string& out_path) {
  const ToyData data = gen_toy_data(seed);
  TinyFnn fnn = make_fnn({7, 5, 3, 1}, 2, seed);
  const TrainResult trained = train_fnn(fnn, data.train_x, data.train_y, 2000, 0.05);
  const auto records = toy_records(data, fnn);
  const auto parent = std::filesystem::path(out_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_embeddings_csv_file(out_path, records, 2, 3);
  return {trained.epochs, trained.accuracy};
}

}  // namespace depthwatch
