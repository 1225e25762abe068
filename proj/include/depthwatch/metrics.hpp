#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "depthwatch/charting.hpp"

namespace depthwatch {

// signals / count for one evaluation cell; empty cells report no rate at all
// rather than 0/0.
struct RateCell {
  std::size_t count = 0;
  std::size_t signals = 0;

  std::optional<double> rate() const {
    if (count == 0) return std::nullopt;
    return static_cast<double>(signals) / static_cast<double>(count);
  }
};

struct MonitoringReport {
  RateCell phase1;                      // FAR
  RateCell phase2_in_control;           // SR (weighted = pooled proportion)
  std::map<int, RateCell> sr_per_class; // per predicted class
  RateCell phase2_out_of_control;       // CDR
  RateCell misclassified;               // SR|M
  RateCell correctly_classified;        // SR|C

  std::optional<double> far() const { return phase1.rate(); }
  std::optional<double> sr_weighted() const { return phase2_in_control.rate(); }
  std::optional<double> cdr() const { return phase2_out_of_control.rate(); }
  std::optional<double> sr_given_misclassified() const { return misclassified.rate(); }
  std::optional<double> sr_given_correct() const { return correctly_classified.rate(); }
};

// Phase I false-alarm rate: plain mean of the signal indicator.
std::optional<double> far(const std::vector<SignalRecord>& signals);

// Phase II in-control signal rate, weighted over predicted classes by their
// sizes; algebraically the pooled signal proportion. Per-class rates are
// reported through *per_class when non-null.
std::optional<double> sr_weighted(const std::vector<SignalRecord>& signals,
                                  std::map<int, RateCell>* per_class = nullptr);

// Phase II out-of-control correct-detection rate over emitted records.
std::optional<double> cdr(const std::vector<SignalRecord>& signals);

// (SR|M, SR|C) over Phase II in-control records; mask[i] marks signals[i] as
// misclassified and must align one-to-one with the in-control records passed.
std::pair<std::optional<double>, std::optional<double>> conditional_sr(
    const std::vector<SignalRecord>& in_control_signals, const std::vector<bool>& misclassified_mask);

// Assembles the full report from a combined signal stream. The optional mask
// aligns with the PhaseII_InControl subsequence of `signals`.
MonitoringReport build_report(const std::vector<SignalRecord>& signals,
                              const std::vector<bool>* in_control_misclassified = nullptr);

}  // namespace depthwatch
