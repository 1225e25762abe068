#include "depthwatch/types.hpp"

namespace depthwatch {

std::string to_token(Phase phase) {
  switch (phase) {
    case Phase::PhaseI: return "phase1";
    case Phase::PhaseII_InControl: return "phase2_ic";
    case Phase::PhaseII_OutOfControl: return "phase2_ooc";
    case Phase::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::optional<Phase> phase_from_token(const std::string& token) {
  if (token == "phase1") return Phase::PhaseI;
  if (token == "phase2_ic") return Phase::PhaseII_InControl;
  if (token == "phase2_ooc") return Phase::PhaseII_OutOfControl;
  if (token == "unlabeled") return Phase::Unlabeled;
  return std::nullopt;
}

std::string class_token(int class_label) {
  if (class_label == kMergedClass) return "merged";
  return std::to_string(class_label);
}

}  // namespace depthwatch
