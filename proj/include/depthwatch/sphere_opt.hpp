#pragma once

#include <Eigen/Core>
#include <functional>

#include "depthwatch/rng.hpp"

namespace depthwatch {

enum class SphereOptimizer {
  CoordinateDescent,
  NelderMead,
  RefinedRandomSearch,
};

struct SphereOptParams {
  int restarts = 10;
  int max_iterations = 100;
  double convergence_tol = 1e-6;
  int eval_budget = 5000;  // RefinedRandomSearch only: total objective evaluations
};

struct SphereOptResult {
  Eigen::VectorXd direction;
  double value = 0.0;
};

using SphereObjective = std::function<double(const Eigen::VectorXd&)>;

// Maximizes `objective` over the unit sphere in R^dim and returns the best
// (direction, value) seen across all restarts, so the value is a lower bound
// on the supremum. +inf objective values are legitimate results; if every
// evaluation comes back NaN a NumericError is thrown. Deterministic given
// the Rng state. If warm_start is non-null it seeds the first restart.
SphereOptResult sphere_optimize(const SphereObjective& objective, int dim,
                                SphereOptimizer method, const SphereOptParams& params,
                                Rng& rng, const Eigen::VectorXd* warm_start = nullptr);

Eigen::VectorXd random_unit_vector(int dim, Rng& rng);

}  // namespace depthwatch
