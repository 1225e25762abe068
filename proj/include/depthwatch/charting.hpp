#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "depthwatch/depth.hpp"
#include "depthwatch/types.hpp"

namespace depthwatch {

enum class ChartKind { R, Q };

// Chart choice with its derived lower control limit. The r chart signals at
// r <= alpha; the Q chart signals when a batch mean of n ranks falls at or
// below the Bates quantile. No upper limit is used.
struct ChartConfig {
  ChartKind chart = ChartKind::R;
  double alpha = 0.05;
  int batch_size = 1;
  double lcl = 0.05;
};

// Computes the lcl: alpha for R; q_lcl(alpha, batch_size) for Q.
ChartConfig make_chart_config(ChartKind chart, double alpha, int batch_size);

// Rank of the query depth within the reference depths, ties counted:
// #{D_t <= D_query} / |R|.
double r_statistic(double query_depth, const std::vector<double>& ref_depths);

// Mean of one batch of r values (pre: exactly the chart's batch size).
double q_statistic(const std::vector<double>& r_values);

// CDF of the mean of n iid uniform(0,1) variables.
double bates_cdf(double x, int n);

// Lower control limit of the Q chart: the closed form (n! a)^(1/n) / n when
// alpha <= 1/n!, otherwise the Bates CDF inverted by bisection to 1e-10.
double q_lcl(double alpha, int n);

struct SignalRecord {
  std::size_t index = 0;   // stream position (last element of a Q batch)
  int class_used = 0;      // reference set consulted; kMergedClass for merged
  double statistic = 0.0;  // r or Q value
  bool signal = false;     // statistic <= lcl
  Phase phase = Phase::Unlabeled;
};

// One ranked observation ready for chart folding.
struct RankedObs {
  std::size_t index = 0;
  int class_used = 0;
  double r_value = 0.0;
  Phase phase = Phase::Unlabeled;
};

// Sequential chart fold over ranked observations in arrival order. R chart:
// one SignalRecord per observation. Q chart: one record per full batch of
// batch_size consecutive observations (index/class/phase taken from the
// batch's last element); a trailing partial batch emits nothing.
std::vector<SignalRecord> fold_ranked_stream(const std::vector<RankedObs>& observations,
                                             const ChartConfig& config);

// Full depth-based monitoring: for each record, the reference set of its
// predicted class (or the merged set as fallback) supplies the cached
// in-sample depths; the record's depth is ranked against them and the chart
// fold is applied. Depth caches must be populated under `spec`. Depths are
// evaluated in parallel; the output equals the sequential result.
std::vector<SignalRecord> monitor_stream(const std::vector<EmbeddingRecord>& records,
                                         const std::map<int, ReferenceSet>& refs,
                                         const DepthSpec& spec, const ChartConfig& config);

}  // namespace depthwatch
