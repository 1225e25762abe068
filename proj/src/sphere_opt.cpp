#include "depthwatch/sphere_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "depthwatch/errors.hpp"

namespace depthwatch {

namespace {

// NaN-safe "a is a better maximum than b".
inline bool better(double a, double b) {
  if (std::isnan(a)) return false;
  if (std::isnan(b)) return true;
  return a > b;
}

// Golden-section maximization of g over [lo, hi]; assumes local unimodality,
// which the surrounding restarts compensate for.
double golden_max(const std::function<double(double)>& g, double lo, double hi,
                  double* best_arg) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 48; ++it) {
    if (better(f1, f2)) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = g(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = g(x2);
    }
  }
  if (better(f1, f2)) {
    *best_arg = x1;
    return f1;
  }
  *best_arg = x2;
  return f2;
}

SphereOptResult coordinate_descent(const SphereObjective& objective, int dim,
                                   const SphereOptParams& params, Eigen::VectorXd p) {
  double value = objective(p);
  for (int pass = 0; pass < params.max_iterations; ++pass) {
    double pass_gain = 0.0;
    for (int i = 0; i < dim; ++i) {
      Eigen::VectorXd axis = Eigen::VectorXd::Zero(dim);
      axis(i) = 1.0;
      Eigen::VectorXd u = axis - axis.dot(p) * p;
      const double norm = u.norm();
      if (norm < 1e-12) continue;  // p already aligned with this axis
      u /= norm;
      auto g = [&](double theta) {
        return objective(std::cos(theta) * p + std::sin(theta) * u);
      };
      double theta_best = 0.0;
      const double candidate = golden_max(g, -std::numbers::pi / 2.0, std::numbers::pi / 2.0,
                                          &theta_best);
      if (better(candidate, value)) {
        pass_gain += std::isfinite(candidate) && std::isfinite(value) ? candidate - value
                                                                      : std::abs(theta_best) + 1.0;
        p = (std::cos(theta_best) * p + std::sin(theta_best) * u).normalized();
        value = candidate;
      }
    }
    if (pass_gain <= params.convergence_tol) break;
  }
  return {p, value};
}

SphereOptResult nelder_mead(const SphereObjective& objective, int dim,
                            const SphereOptParams& params, const Eigen::VectorXd& start) {
  // Runs in R^dim on the scale-invariant lift f(x) = objective(x / |x|).
  const double kBad = -std::numeric_limits<double>::infinity();
  auto eval = [&](const Eigen::VectorXd& x) {
    const double norm = x.norm();
    if (norm < 1e-9 || !x.allFinite()) return kBad;
    return objective(x / norm);
  };

  const int m = dim + 1;
  std::vector<Eigen::VectorXd> pts(m);
  std::vector<double> vals(m);
  pts[0] = start;
  vals[0] = eval(start);
  for (int i = 1; i < m; ++i) {
    pts[i] = start;
    pts[i](i - 1) += 0.5;
    vals[i] = eval(pts[i]);
  }

  auto order = [&]() {
    std::vector<int> idx(m);
    for (int i = 0; i < m; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return better(vals[a], vals[b]); });
    std::vector<Eigen::VectorXd> p2(m);
    std::vector<double> v2(m);
    for (int i = 0; i < m; ++i) {
      p2[i] = pts[idx[i]];
      v2[i] = vals[idx[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };

  constexpr double kAlpha = 1.0, kGamma = 2.0, kRho = 0.5, kSigma = 0.5;
  for (int it = 0; it < params.max_iterations; ++it) {
    order();
    if (std::isfinite(vals[0]) && std::isfinite(vals[m - 1]) &&
        vals[0] - vals[m - 1] < params.convergence_tol) {
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(dim);
    for (int i = 0; i < m - 1; ++i) centroid += pts[i];
    centroid /= static_cast<double>(m - 1);

    const Eigen::VectorXd reflected = centroid + kAlpha * (centroid - pts[m - 1]);
    const double fr = eval(reflected);
    if (better(fr, vals[0])) {
      const Eigen::VectorXd expanded = centroid + kGamma * (reflected - centroid);
      const double fe = eval(expanded);
      if (better(fe, fr)) {
        pts[m - 1] = expanded;
        vals[m - 1] = fe;
      } else {
        pts[m - 1] = reflected;
        vals[m - 1] = fr;
      }
      continue;
    }
    if (better(fr, vals[m - 2])) {
      pts[m - 1] = reflected;
      vals[m - 1] = fr;
      continue;
    }
    const Eigen::VectorXd contracted = centroid + kRho * (pts[m - 1] - centroid);
    const double fc = eval(contracted);
    if (better(fc, vals[m - 1])) {
      pts[m - 1] = contracted;
      vals[m - 1] = fc;
      continue;
    }
    for (int i = 1; i < m; ++i) {
      pts[i] = pts[0] + kSigma * (pts[i] - pts[0]);
      vals[i] = eval(pts[i]);
    }
  }
  order();
  const double norm = pts[0].norm();
  Eigen::VectorXd dir = norm > 1e-9 ? Eigen::VectorXd(pts[0] / norm) : pts[0];
  return {dir, vals[0]};
}

SphereOptResult refined_random_search(const SphereObjective& objective, int dim,
                                      const SphereOptParams& params, Eigen::VectorXd p,
                                      int eval_budget, Rng& rng) {
  double value = objective(p);
  double radius = 1.0;
  const int batch = std::max(4, dim * 2);
  int evals = 1;
  while (evals < eval_budget) {
    bool improved = false;
    for (int j = 0; j < batch && evals < eval_budget; ++j, ++evals) {
      Eigen::VectorXd step(dim);
      for (int i = 0; i < dim; ++i) step(i) = rng.normal();
      Eigen::VectorXd cand = p + radius * step;
      const double norm = cand.norm();
      if (norm < 1e-12) continue;
      cand /= norm;
      const double f = objective(cand);
      if (better(f, value)) {
        p = cand;
        value = f;
        improved = true;
      }
    }
    if (!improved) {
      radius *= 0.6;
      if (radius < 1e-9) radius = 1e-9;
    }
  }
  return {p, value};
}

}  // namespace

Eigen::VectorXd random_unit_vector(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  for (;;) {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    const double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

SphereOptResult sphere_optimize(const SphereObjective& objective, int dim,
                                SphereOptimizer method, const SphereOptParams& params,
                                Rng& rng, const Eigen::VectorXd* warm_start) {
  if (dim < 1) throw NumericError("sphere_optimize: dimension must be positive");
  const int restarts = std::max(1, params.restarts);

  SphereOptResult best;
  best.value = std::numeric_limits<double>::quiet_NaN();
  const int rrs_per_restart = std::max(8, params.eval_budget / restarts);

  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd start;
    if (r == 0 && warm_start != nullptr && warm_start->size() == dim &&
        warm_start->norm() > 1e-12) {
      start = warm_start->normalized();
    } else {
      start = random_unit_vector(dim, rng);
    }
    SphereOptResult res;
    switch (method) {
      case SphereOptimizer::CoordinateDescent:
        res = coordinate_descent(objective, dim, params, start);
        break;
      case SphereOptimizer::NelderMead:
        res = nelder_mead(objective, dim, params, start);
        break;
      case SphereOptimizer::RefinedRandomSearch:
        res = refined_random_search(objective, dim, params, start, rrs_per_restart, rng);
        break;
    }
    if (best.direction.size() == 0 || better(res.value, best.value)) {
      best = res;
    }
  }
  if (std::isnan(best.value)) {
    throw NumericError("sphere_optimize: objective returned NaN everywhere");
  }
  return best;
}

}  // namespace depthwatch
