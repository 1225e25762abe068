#include "depthwatch/metrics.hpp"

#include "depthwatch/errors.hpp"

namespace depthwatch {

namespace {

RateCell cell_over_phase(const std::vector<SignalRecord>& signals, Phase phase) {
  RateCell cell;
  for (const auto& s : signals) {
    if (s.phase != phase) continue;
    ++cell.count;
    if (s.signal) ++cell.signals;
  }
  return cell;
}

}  // namespace

std::optional<double> far(const std::vector<SignalRecord>& signals) {
  return cell_over_phase(signals, Phase::PhaseI).rate();
}

std::optional<double> sr_weighted(const std::vector<SignalRecord>& signals,
                                  std::map<int, RateCell>* per_class) {
  RateCell total;
  std::map<int, RateCell> classes;
  for (const auto& s : signals) {
    if (s.phase != Phase::PhaseII_InControl) continue;
    ++total.count;
    ++classes[s.class_used].count;
    if (s.signal) {
      ++total.signals;
      ++classes[s.class_used].signals;
    }
  }
  if (per_class != nullptr) *per_class = std::move(classes);
  return total.rate();
}

std::optional<double> cdr(const std::vector<SignalRecord>& signals) {
  return cell_over_phase(signals, Phase::PhaseII_OutOfControl).rate();
}

std::pair<std::optional<double>, std::optional<double>> conditional_sr(
    const std::vector<SignalRecord>& in_control_signals,
    const std::vector<bool>& misclassified_mask) {
  if (in_control_signals.size() != misclassified_mask.size()) {
    throw DataError("conditional_sr: mask length " + std::to_string(misclassified_mask.size()) +
                    " does not match record count " + std::to_string(in_control_signals.size()));
  }
  RateCell mis, cor;
  for (std::size_t i = 0; i < in_control_signals.size(); ++i) {
    RateCell& cell = misclassified_mask[i] ? mis : cor;
    ++cell.count;
    if (in_control_signals[i].signal) ++cell.signals;
  }
  return {mis.rate(), cor.rate()};
}

MonitoringReport build_report(const std::vector<SignalRecord>& signals,
                              const std::vector<bool>* in_control_misclassified) {
  MonitoringReport report;
  report.phase1 = cell_over_phase(signals, Phase::PhaseI);
  report.phase2_out_of_control = cell_over_phase(signals, Phase::PhaseII_OutOfControl);
  for (const auto& s : signals) {
    if (s.phase != Phase::PhaseII_InControl) continue;
    ++report.phase2_in_control.count;
    ++report.sr_per_class[s.class_used].count;
    if (s.signal) {
      ++report.phase2_in_control.signals;
      ++report.sr_per_class[s.class_used].signals;
    }
  }
  if (in_control_misclassified != nullptr) {
    std::vector<SignalRecord> in_control;
    for (const auto& s : signals) {
      if (s.phase == Phase::PhaseII_InControl) in_control.push_back(s);
    }
    if (in_control.size() != in_control_misclassified->size()) {
      throw DataError("build_report: misclassification mask does not align with in-control records");
    }
    for (std::size_t i = 0; i < in_control.size(); ++i) {
      RateCell& cell = (*in_control_misclassified)[i] ? report.misclassified
                                                      : report.correctly_classified;
      ++cell.count;
      if (in_control[i].signal) ++cell.signals;
    }
  }
  return report;
}

}  // namespace depthwatch
