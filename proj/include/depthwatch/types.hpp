#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace depthwatch {

// Class labels are 1-based ({1, .., v}); softmax_j is the score of class j+1.
// kMergedClass marks a reference sample pooled over all classes.
inline constexpr int kMergedClass = -1;

enum class Phase {
  PhaseI,
  PhaseII_InControl,
  PhaseII_OutOfControl,
  Unlabeled,
};

std::string to_token(Phase phase);
std::optional<Phase> phase_from_token(const std::string& token);

std::string class_token(int class_label);

// One monitored observation: the embedding vector plus the labels and
// phase tag needed for reference building and evaluation.
struct EmbeddingRecord {
  std::size_t index = 0;
  Eigen::VectorXd embedding;
  std::optional<int> true_label;
  int predicted_label = 0;
  std::optional<Eigen::VectorXd> softmax;
  Phase phase = Phase::Unlabeled;

  bool misclassified() const {
    return true_label.has_value() && *true_label != predicted_label;
  }
};

}  // namespace depthwatch
