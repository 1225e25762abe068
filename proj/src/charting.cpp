#include "depthwatch/charting.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

#include "depthwatch/errors.hpp"
#include "depthwatch/parallel.hpp"

namespace depthwatch {

namespace {

double factorial_d(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= static_cast<double>(i);
  return f;
}

const ReferenceSet& reference_for(const std::map<int, ReferenceSet>& refs, int predicted) {
  auto it = refs.find(predicted);
  if (it != refs.end()) return it->second;
  it = refs.find(kMergedClass);
  if (it != refs.end()) return it->second;
  throw DataError("no reference set for predicted class " + class_token(predicted) +
                  " and no merged fallback");
}

}  // namespace

double r_statistic(double query_depth, const std::vector<double>& ref_depths) {
  assert(!ref_depths.empty());
  std::size_t at_or_below = 0;
  for (double d : ref_depths) {
    if (d <= query_depth) ++at_or_below;
  }
  return static_cast<double>(at_or_below) / static_cast<double>(ref_depths.size());
}

double q_statistic(const std::vector<double>& r_values) {
  assert(!r_values.empty());
  double sum = 0.0;
  for (double r : r_values) sum += r;
  return sum / static_cast<double>(r_values.size());
}

double bates_cdf(double x, int n) {
  if (n < 1) throw NumericError("bates_cdf: n must be >= 1");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  // Irwin-Hall CDF at t = n x:  (1/n!) sum_{j<=t} (-1)^j C(n,j) (t-j)^n
  const double t = static_cast<double>(n) * x;
  const int jmax = static_cast<int>(std::floor(t));
  double sum = 0.0;
  double binom = 1.0;  // C(n, j), updated incrementally
  for (int j = 0; j <= jmax; ++j) {
    const double term = binom * std::pow(t - j, n);
    sum += (j % 2 == 0) ? term : -term;
    binom = binom * static_cast<double>(n - j) / static_cast<double>(j + 1);
  }
  return sum / factorial_d(n);
}

double q_lcl(double alpha, int n) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw NumericError("q_lcl: alpha must be in (0, 1)");
  if (n < 2) throw NumericError("q_lcl: batch size must be >= 2");
  const double inv_nfact = 1.0 / factorial_d(n);
  if (alpha <= inv_nfact) {
    return std::pow(factorial_d(n) * alpha, 1.0 / static_cast<double>(n)) /
           static_cast<double>(n);
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (bates_cdf(mid, n) < alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ChartConfig make_chart_config(ChartKind chart, double alpha, int batch_size) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw NumericError("alpha must be in (0, 1)");
  ChartConfig config;
  config.chart = chart;
  config.alpha = alpha;
  if (chart == ChartKind::R) {
    config.batch_size = 1;
    config.lcl = alpha;
  } else {
    if (batch_size < 2) throw NumericError("Q chart batch size must be >= 2");
    config.batch_size = batch_size;
    config.lcl = q_lcl(alpha, batch_size);
  }
  return config;
}

std::vector<SignalRecord> fold_ranked_stream(const std::vector<RankedObs>& observations,
                                             const ChartConfig& config) {
  std::vector<SignalRecord> out;
  if (config.chart == ChartKind::R) {
    out.reserve(observations.size());
    for (const auto& obs : observations) {
      out.push_back({obs.index, obs.class_used, obs.r_value, obs.r_value <= config.lcl,
                     obs.phase});
    }
    return out;
  }
  const std::size_t n = static_cast<std::size_t>(config.batch_size);
  out.reserve(observations.size() / n);
  double batch_sum = 0.0;
  std::size_t in_batch = 0;
  for (const auto& obs : observations) {
    batch_sum += obs.r_value;
    if (++in_batch == n) {
      const double q = batch_sum / static_cast<double>(n);
      // A batch is attributed to its last element.
      out.push_back({obs.index, obs.class_used, q, q <= config.lcl, obs.phase});
      batch_sum = 0.0;
      in_batch = 0;
    }
  }
  return out;
}

std::vector<SignalRecord> monitor_stream(const std::vector<EmbeddingRecord>& records,
                                         const std::map<int, ReferenceSet>& refs,
                                         const DepthSpec& spec, const ChartConfig& config) {
  const std::string key = spec.cache_key();
  std::vector<RankedObs> ranked(records.size());
  // Resolve reference sets up front so missing classes fail before any work.
  std::vector<const ReferenceSet*> chosen(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    chosen[i] = &reference_for(refs, records[i].predicted_label);
    if (chosen[i]->cached_depths(key) == nullptr) {
      throw DataError("depth cache for class " + class_token(chosen[i]->label()) +
                      " is not populated under the active DepthSpec");
    }
  }
  parallel_for(records.size(), [&](std::size_t i) {
    const EmbeddingRecord& rec = records[i];
    const ReferenceSet& ref = *chosen[i];
    const double d = depth(rec.embedding, ref, spec, salt_for_query(rec.index));
    ranked[i] = {rec.index, ref.label(), r_statistic(d, *ref.cached_depths(key)), rec.phase};
  });
  return fold_ranked_stream(ranked, config);
}

}  // namespace depthwatch
