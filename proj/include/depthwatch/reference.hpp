#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "depthwatch/types.hpp"

namespace depthwatch {

// Phase I reference sample of one class (or the merged pool), with the
// sample mean and inverse sample covariance cached at construction.
// Immutable after construction except for the per-spec depth cache.
class ReferenceSet {
 public:
  // points: |R| rows x k columns. Throws NumericError if |R| < k + 2, if any
  // entry is non-finite, or if the sample covariance is singular and
  // ridge_fallback is off (the fallback adds (1e-8 * trace/k) * I).
  // source_indices, when given, records the originating stream index of each
  // row (used for Phase I in-sample evaluation).
  static ReferenceSet build(Eigen::MatrixXd points, int class_label,
                            bool ridge_fallback = false,
                            std::vector<std::size_t> source_indices = {});

  int label() const { return label_; }
  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(points_.cols()); }
  const Eigen::MatrixXd& points() const { return points_; }
  const Eigen::VectorXd& mean_vec() const { return mean_; }
  const Eigen::MatrixXd& inv_cov() const { return inv_cov_; }
  bool ridged() const { return ridged_; }
  const std::vector<std::size_t>& source_indices() const { return source_indices_; }

  // Depth cache for exactly one spec at a time; a mismatched key reads as
  // absent and a new store replaces the old one.
  const std::vector<double>* cached_depths(const std::string& spec_key) const;
  void set_depth_cache(std::string spec_key, std::vector<double> depths);

 private:
  ReferenceSet() = default;

  int label_ = kMergedClass;
  Eigen::MatrixXd points_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd inv_cov_;
  bool ridged_ = false;
  std::vector<std::size_t> source_indices_;
  std::string cache_key_;
  std::vector<double> cache_values_;
};

struct Phase1Validation {
  std::vector<EmbeddingRecord> kept;
  std::size_t removed = 0;
};

// Keeps the correctly classified Phase I records. Every input record must be
// PhaseI and carry a true label; otherwise DataError.
Phase1Validation validate_phase1(const std::vector<EmbeddingRecord>& records);

// The `size` records of class `c` with the largest softmax score for that
// class; ties broken by lower stream index.
ReferenceSet build_reference_by_confidence(const std::vector<EmbeddingRecord>& validated,
                                           int class_label, std::size_t size,
                                           bool ridge_fallback = false);

// Uniform sample without replacement, deterministic given the seed.
ReferenceSet build_reference_random(const std::vector<EmbeddingRecord>& validated,
                                    int class_label, std::size_t size, std::uint64_t seed,
                                    bool ridge_fallback = false);

// Class-balanced pool over all classes: size/v top-confidence points per
// class, remainder going to the earliest (lowest-id) classes.
ReferenceSet build_reference_merged(const std::vector<EmbeddingRecord>& validated,
                                    std::size_t size, bool ridge_fallback = false);

// Distinct class labels present in `records`, ascending.
std::vector<int> class_labels(const std::vector<EmbeddingRecord>& records);

}  // namespace depthwatch
