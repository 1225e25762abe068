#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "depthwatch/reference.hpp"
#include "depthwatch/sphere_opt.hpp"

namespace depthwatch {

enum class DepthNotion {
  Mahalanobis,
  Simplicial,
  HalfspaceRobust,
  Projection,
};

enum class ProjectionVariant {
  Symmetric,
  Asymmetric,
};

// Which depth to compute and how to approximate it. projection_variant and
// optimizer only apply to Projection; direction_budget drives HalfspaceRobust
// sampling and the RefinedRandomSearch evaluation budget.
struct DepthSpec {
  DepthNotion notion = DepthNotion::Mahalanobis;
  ProjectionVariant projection_variant = ProjectionVariant::Symmetric;
  SphereOptimizer optimizer = SphereOptimizer::NelderMead;
  int direction_budget = 1000;
  int restarts = 10;
  int max_iterations = 100;
  double convergence_tol = 1e-6;
  std::uint64_t rng_seed = 0;

  void validate() const;  // throws NumericError on bad parameter combinations
  std::string cache_key() const;
  std::string method_label() const;

  // "md", "sd", "hdr", "pd1".."pd3", "pd1a".."pd3a" with literature defaults
  // (refined random search gets a 5000-evaluation budget).
  static std::optional<DepthSpec> parse_method(std::string_view label, std::uint64_t seed);
};

// 1 / (1 + squared Mahalanobis distance to the reference mean).
double mahalanobis_depth(const Eigen::VectorXd& query, const ReferenceSet& ref);

// Exact fraction of the C(|R|, k+1) open simplices containing the query;
// supported for k <= 3. Degenerate simplices never contain anything. The
// matrix overload only needs k+1 points (no covariance involved).
double simplicial_depth(const Eigen::VectorXd& query, const Eigen::MatrixXd& points);
double simplicial_depth(const Eigen::VectorXd& query, const ReferenceSet& ref);

// Smoothed direction-sampled Tukey depth:
// min over sampled unit directions of (#{<p,m_b> >= <p,query>} + 1) / (|R| + 2).
// Strictly positive everywhere and continuous beyond the convex hull.
double halfspace_depth_robust(const Eigen::VectorXd& query, const ReferenceSet& ref,
                              const DepthSpec& spec, std::uint64_t salt = 0);

// (1 + sup outlyingness)^(-1). Symmetric variant: |<p,q> - med| / MAD.
// Asymmetric variant: the upward part only, max(<p,q> - med, 0) over the
// median of the strictly positive deviations. A zero scale makes a direction
// infinitely outlying when the numerator is positive; an infinite supremum
// yields depth 0.
double projection_depth(const Eigen::VectorXd& query, const ReferenceSet& ref,
                        const DepthSpec& spec, std::uint64_t salt = 0);

double depth(const Eigen::VectorXd& query, const ReferenceSet& ref, const DepthSpec& spec,
             std::uint64_t salt = 0);

// Depth of every reference row against the full set, row i salted with
// salt_for_reference_row(i). Evaluated in parallel; output is order-stable.
std::vector<double> in_sample_depths(const ReferenceSet& ref, const DepthSpec& spec);

void populate_depth_cache(ReferenceSet& ref, const DepthSpec& spec);

// Exposed for the projection-depth grid oracle in tests: outlyingness of the
// query along one direction.
double projection_outlyingness(const Eigen::VectorXd& direction, const Eigen::VectorXd& query,
                               const Eigen::MatrixXd& ref_points, ProjectionVariant variant);

}  // namespace depthwatch
