#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depthwatch/reference.hpp"

namespace depthwatch {

enum class BenchmarkMethod { LOF, KDEOS, IForest, MDis, NOF };
enum class KdeosKernel { Gaussian, Epanechnikov };
enum class Orientation { HigherIsCentral, HigherIsOutlying };

std::optional<BenchmarkMethod> benchmark_from_label(std::string_view label);
std::string benchmark_label(BenchmarkMethod method);

struct BenchmarkParams {
  int lof_k = 20;
  int kdeos_k_min = 5;
  int kdeos_k_max = 20;
  KdeosKernel kdeos_kernel = KdeosKernel::Gaussian;
  int iforest_trees = 100;
  int iforest_subsample = 256;  // clipped to |R| at fit time
  std::uint64_t seed = 0;
};

// Identity for HigherIsCentral, negation for HigherIsOutlying, so that the
// r statistic's <=-count always measures "at most this central".
double score_to_centrality(Orientation orientation, double score);

// Classic local outlier factor of the query against the reference points
// (query excluded from its own neighborhood). Neighborhoods include distance
// ties at the k-distance; reachability distances are floored at the
// neighbor's k-distance.
double lof_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref, int k);

// Kernel-density outlier score: per neighborhood size in [k_min, k_max] the
// density uses each neighbor's k-distance as bandwidth; the query's density
// is z-scored against the reference densities and the mean z is negated so
// higher means more outlying. Zero bandwidths are floored at 1e-12 times the
// data scale.
double kdeos_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref, KdeosKernel kernel,
                   int k_min, int k_max);

// Univariate squared Mahalanobis distance (sample variance, n-1).
double mdis_score(double query, const std::vector<double>& ref);

// Natural outlier factor: grow k until every reference point has a reverse
// k-nearest neighbor (capped at |R|-1); the score is the LOF at that k.
double nof_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref,
                 int* natural_k = nullptr, bool* capped = nullptr);

// Standard isolation forest: s = 2^(-E[h]/c(psi)), deterministic given seed.
class IsolationForest {
 public:
  struct Node {
    int attribute = -1;  // -1 marks a leaf
    double split = 0.0;
    int left = -1, right = -1;
    double leaf_adjust = 0.0;  // c(size) at the leaf
    int depth = 0;
  };

  static IsolationForest fit(const Eigen::MatrixXd& ref, int trees, int subsample,
                             std::uint64_t seed);
  double score(const Eigen::VectorXd& query) const;

 private:
  std::vector<std::vector<Node>> trees_;
  double c_psi_ = 1.0;
};

// One fitted benchmark scorer bound to a reference sample, exposing raw
// scores, centralities, and the in-sample centralities needed for ranks.
class CentralityScorer {
 public:
  static CentralityScorer fit(BenchmarkMethod method, const ReferenceSet& ref,
                              const BenchmarkParams& params);

  BenchmarkMethod method() const { return method_; }
  Orientation orientation() const { return Orientation::HigherIsOutlying; }
  double score(const Eigen::VectorXd& query) const;
  double centrality(const Eigen::VectorXd& query) const {
    return score_to_centrality(orientation(), score(query));
  }
  const std::vector<double>& in_sample_centralities() const { return in_sample_; }
  int natural_k() const { return natural_k_; }
  bool natural_capped() const { return natural_capped_; }

 private:
  struct Impl;
  BenchmarkMethod method_ = BenchmarkMethod::LOF;
  std::shared_ptr<const Impl> impl_;
  std::vector<double> in_sample_;
  int natural_k_ = 0;
  bool natural_capped_ = false;
};

}  // namespace depthwatch
