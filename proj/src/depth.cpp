#include "depthwatch/depth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "depthwatch/errors.hpp"
#include "depthwatch/parallel.hpp"
#include "depthwatch/stats.hpp"

namespace depthwatch {

namespace {

inline int sign_of(double x) {
  if (x > 0.0) return 1;
  if (x < 0.0) return -1;
  return 0;
}

inline double median_inplace(std::vector<double>& v) {
  const std::size_t n = v.size();
  const std::size_t mid = n / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t result = 1;
  for (std::uint64_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;  // numerator stays divisible at each step
  }
  return result;
}

// Pairs (a, b) with a < q < b strictly; ties with q contribute nothing.
std::uint64_t simplicial_count_1d(const Eigen::VectorXd& query, const Eigen::MatrixXd& pts) {
  const double q = query(0);
  std::uint64_t below = 0, above = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double x = pts(i, 0);
    if (x < q) ++below;
    else if (x > q) ++above;
  }
  return below * above;
}

// Origin strictly inside triangle(v_a, v_b, v_c) iff the pairwise cross
// products carry one consistent orientation.
std::uint64_t simplicial_count_2d(const Eigen::VectorXd& query, const Eigen::MatrixXd& pts) {
  const Eigen::Index n = pts.rows();
  std::vector<double> vx(n), vy(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    vx[i] = pts(i, 0) - query(0);
    vy[i] = pts(i, 1) - query(1);
  }
  std::vector<signed char> cross(static_cast<std::size_t>(n) * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const int s = sign_of(vx[i] * vy[j] - vy[i] * vx[j]);
      cross[static_cast<std::size_t>(i) * n + j] = static_cast<signed char>(s);
      cross[static_cast<std::size_t>(j) * n + i] = static_cast<signed char>(-s);
    }
  }
  std::uint64_t count = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const signed char* row_a = cross.data() + static_cast<std::size_t>(a) * n;
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const signed char s_ab = row_a[b];
      if (s_ab == 0) continue;
      const signed char* row_b = cross.data() + static_cast<std::size_t>(b) * n;
      for (Eigen::Index c = b + 1; c < n; ++c) {
        if (row_b[c] == s_ab && row_a[c] == -s_ab) ++count;
      }
    }
  }
  return count;
}

// Origin strictly inside tetra(v_a..v_d) iff
// sgn D(b,c,d) = -sgn D(a,c,d) = sgn D(a,b,d) = -sgn D(a,b,c) != 0,
// with D the 3x3 determinant of the centered vertices. Cross products are
// hoisted per (a,b,c) so the innermost test is three dot products with
// early exits.
std::uint64_t simplicial_count_3d(const Eigen::VectorXd& query, const Eigen::MatrixXd& pts) {
  const Eigen::Index n = pts.rows();
  std::vector<double> v(static_cast<std::size_t>(n) * 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    v[3 * i + 0] = pts(i, 0) - query(0);
    v[3 * i + 1] = pts(i, 1) - query(1);
    v[3 * i + 2] = pts(i, 2) - query(2);
  }
  auto cross3 = [&](Eigen::Index i, Eigen::Index j, double* out) {
    const double* a = &v[3 * i];
    const double* b = &v[3 * j];
    out[0] = a[1] * b[2] - a[2] * b[1];
    out[1] = a[2] * b[0] - a[0] * b[2];
    out[2] = a[0] * b[1] - a[1] * b[0];
  };
  auto dot3 = [&](const double* c, Eigen::Index i) {
    const double* w = &v[3 * i];
    return c[0] * w[0] + c[1] * w[1] + c[2] * w[2];
  };

  std::uint64_t count = 0;
  double c_ab[3], c_ac[3], c_bc[3];
  for (Eigen::Index a = 0; a + 3 < n; ++a) {
    for (Eigen::Index b = a + 1; b + 2 < n; ++b) {
      cross3(a, b, c_ab);
      for (Eigen::Index c = b + 1; c + 1 < n; ++c) {
        const int s4 = sign_of(dot3(c_ab, c));  // D(a,b,c)
        if (s4 == 0) continue;                  // degenerate base triangle
        cross3(a, c, c_ac);
        cross3(b, c, c_bc);
        const int want1 = -s4;  // required sign of D(b,c,d) and D(a,b,d)
        for (Eigen::Index d = c + 1; d < n; ++d) {
          if (sign_of(dot3(c_bc, d)) != want1) continue;
          if (sign_of(dot3(c_ac, d)) != s4) continue;
          if (sign_of(dot3(c_ab, d)) == want1) ++count;
        }
      }
    }
  }
  return count;
}

}  // namespace

void DepthSpec::validate() const {
  if (direction_budget < 1) throw NumericError("DepthSpec: direction_budget must be >= 1");
  if (restarts < 1) throw NumericError("DepthSpec: restarts must be >= 1");
  if (max_iterations < 1) throw NumericError("DepthSpec: max_iterations must be >= 1");
  if (!(convergence_tol > 0.0)) throw NumericError("DepthSpec: convergence_tol must be > 0");
}

std::string DepthSpec::method_label() const {
  switch (notion) {
    case DepthNotion::Mahalanobis: return "md";
    case DepthNotion::Simplicial: return "sd";
    case DepthNotion::HalfspaceRobust: return "hdr";
    case DepthNotion::Projection: {
      std::string label = "pd";
      switch (optimizer) {
        case SphereOptimizer::CoordinateDescent: label += '1'; break;
        case SphereOptimizer::NelderMead: label += '2'; break;
        case SphereOptimizer::RefinedRandomSearch: label += '3'; break;
      }
      if (projection_variant == ProjectionVariant::Asymmetric) label += 'a';
      return label;
    }
  }
  return "md";
}

std::string DepthSpec::cache_key() const {
  std::ostringstream out;
  out << method_label() << "|b" << direction_budget << "|r" << restarts << "|i"
      << max_iterations << "|t" << convergence_tol << "|s" << rng_seed;
  return out.str();
}

std::optional<DepthSpec> DepthSpec::parse_method(std::string_view label, std::uint64_t seed) {
  DepthSpec spec;
  spec.rng_seed = seed;
  if (label == "md") {
    spec.notion = DepthNotion::Mahalanobis;
    return spec;
  }
  if (label == "sd") {
    spec.notion = DepthNotion::Simplicial;
    return spec;
  }
  if (label == "hdr") {
    spec.notion = DepthNotion::HalfspaceRobust;
    spec.direction_budget = 1000;
    return spec;
  }
  if (label.size() >= 3 && label.substr(0, 2) == "pd") {
    spec.notion = DepthNotion::Projection;
    switch (label[2]) {
      case '1': spec.optimizer = SphereOptimizer::CoordinateDescent; break;
      case '2': spec.optimizer = SphereOptimizer::NelderMead; break;
      case '3':
        spec.optimizer = SphereOptimizer::RefinedRandomSearch;
        spec.direction_budget = 5000;
        break;
      default: return std::nullopt;
    }
    if (label.size() == 3) {
      spec.projection_variant = ProjectionVariant::Symmetric;
      return spec;
    }
    if (label.size() == 4 && label[3] == 'a') {
      spec.projection_variant = ProjectionVariant::Asymmetric;
      return spec;
    }
  }
  return std::nullopt;
}

double mahalanobis_depth(const Eigen::VectorXd& query, const ReferenceSet& ref) {
  const Eigen::VectorXd centered = query - ref.mean_vec();
  const double d2 = centered.dot(ref.inv_cov() * centered);
  return 1.0 / (1.0 + d2);
}

double simplicial_depth(const Eigen::VectorXd& query, const Eigen::MatrixXd& points) {
  const std::size_t k = static_cast<std::size_t>(points.cols());
  const std::size_t n = static_cast<std::size_t>(points.rows());
  if (k > 3) {
    throw NumericError("simplicial depth is supported for k <= 3 (got k = " +
                       std::to_string(k) + "); the enumeration is O(n^(k+1))");
  }
  if (n < k + 1) {
    throw NumericError("simplicial depth needs at least k + 1 reference points");
  }
  std::uint64_t contained = 0;
  switch (k) {
    case 1: contained = simplicial_count_1d(query, points); break;
    case 2: contained = simplicial_count_2d(query, points); break;
    case 3: contained = simplicial_count_3d(query, points); break;
  }
  const std::uint64_t total = binomial_u64(n, k + 1);
  return static_cast<double>(contained) / static_cast<double>(total);
}

double simplicial_depth(const Eigen::VectorXd& query, const ReferenceSet& ref) {
  return simplicial_depth(query, ref.points());
}

namespace {

// Kernel-smoothed one-sided rank: sum of logistic weights sigma((a_i - t)/h)
// in place of the indicator count #{a_i >= t}. A raw count ties every hull
// vertex at the same minimum depth and ruins the rank calibration; the
// smoothed count is strictly positive, continuous beyond the convex hull,
// gap-sensitive (so in-sample values are generically distinct) and decays to
// the 1/(n+2) floor far out. Bandwidth = average projection spacing.
double smoothed_count_above(double t, const std::vector<double>& proj, double lo, double hi) {
  const double n = static_cast<double>(proj.size());
  double h = (hi - lo) / n;
  if (!(h > 0.0)) h = 1e-12 * (1.0 + std::abs(hi));
  double count = 0.0;
  for (double a : proj) {
    const double z = std::clamp((a - t) / h, -40.0, 40.0);
    count += 1.0 / (1.0 + std::exp(-z));
  }
  return count;
}

}  // namespace

double halfspace_depth_robust(const Eigen::VectorXd& query, const ReferenceSet& ref,
                              const DepthSpec& spec, std::uint64_t salt) {
  spec.validate();
  const Eigen::MatrixXd& pts = ref.points();
  const double n = static_cast<double>(ref.size());
  Rng rng(derive_seed(spec.rng_seed, seed_tag::kHalfspaceDirections, salt));
  double best = 1.0;
  const int dim = static_cast<int>(ref.dim());
  std::vector<double> proj(ref.size());
  for (int t = 0; t < spec.direction_budget; ++t) {
    const Eigen::VectorXd p = random_unit_vector(dim, rng);
    const double proj_q = p.dot(query);
    double lo = proj_q, hi = proj_q;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      const double value = pts.row(i).dot(p);
      proj[static_cast<std::size_t>(i)] = value;
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }
    const double above = smoothed_count_above(proj_q, proj, lo, hi);
    const double value = (above + 1.0) / (n + 2.0);
    best = std::min(best, value);
  }
  return best;
}

double projection_outlyingness(const Eigen::VectorXd& direction, const Eigen::VectorXd& query,
                               const Eigen::MatrixXd& ref_points, ProjectionVariant variant) {
  const Eigen::Index n = ref_points.rows();
  std::vector<double> proj(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) proj[static_cast<std::size_t>(i)] = ref_points.row(i).dot(direction);
  std::vector<double> scratch = proj;
  const double med = median_inplace(scratch);
  const double proj_q = direction.dot(query);

  double numerator = 0.0;
  double scale = 0.0;
  if (variant == ProjectionVariant::Symmetric) {
    numerator = std::abs(proj_q - med);
    scratch.resize(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) scratch[i] = std::abs(proj[i] - med);
    scale = median_inplace(scratch);
  } else {
    numerator = std::max(proj_q - med, 0.0);
    scratch.clear();
    for (double value : proj) {
      const double dev = value - med;
      if (dev > 0.0) scratch.push_back(dev);
    }
    scale = scratch.empty() ? 0.0 : median_inplace(scratch);
  }
  if (scale <= 0.0) {
    return numerator > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  return numerator / scale;
}

double projection_depth(const Eigen::VectorXd& query, const ReferenceSet& ref,
                        const DepthSpec& spec, std::uint64_t salt) {
  spec.validate();
  const Eigen::MatrixXd& pts = ref.points();
  const int dim = static_cast<int>(ref.dim());

  SphereObjective objective = [&](const Eigen::VectorXd& p) {
    return projection_outlyingness(p, query, pts, spec.projection_variant);
  };

  // Coordinatewise median center; the ray from it toward the query is the
  // natural first guess for the worst direction.
  Eigen::VectorXd center(dim);
  {
    std::vector<double> column(ref.size());
    for (int j = 0; j < dim; ++j) {
      for (std::size_t i = 0; i < ref.size(); ++i) column[i] = pts(static_cast<Eigen::Index>(i), j);
      center(j) = median_inplace(column);
    }
  }
  Eigen::VectorXd warm = query - center;
  if (spec.projection_variant == ProjectionVariant::Symmetric) {
    // The symmetric objective is antipodal (obj(p) == obj(-p)); canonicalize
    // the warm start so reflected queries take identical search paths.
    for (int j = 0; j < dim; ++j) {
      if (warm(j) > 0.0) break;
      if (warm(j) < 0.0) {
        warm = -warm;
        break;
      }
    }
  }

  SphereOptParams params;
  params.restarts = spec.restarts;
  params.max_iterations = spec.max_iterations;
  params.convergence_tol = spec.convergence_tol;
  params.eval_budget = spec.direction_budget;

  Rng rng(derive_seed(spec.rng_seed, seed_tag::kProjectionSearch, salt));
  const SphereOptResult res = sphere_optimize(objective, dim, spec.optimizer, params, rng,
                                              warm.norm() > 1e-12 ? &warm : nullptr);
  if (std::isinf(res.value)) return 0.0;  // documented limit case (zero scale)
  return 1.0 / (1.0 + res.value);
}

double depth(const Eigen::VectorXd& query, const ReferenceSet& ref, const DepthSpec& spec,
             std::uint64_t salt) {
  switch (spec.notion) {
    case DepthNotion::Mahalanobis: return mahalanobis_depth(query, ref);
    case DepthNotion::Simplicial: return simplicial_depth(query, ref);
    case DepthNotion::HalfspaceRobust: return halfspace_depth_robust(query, ref, spec, salt);
    case DepthNotion::Projection: return projection_depth(query, ref, spec, salt);
  }
  return 0.0;
}

std::vector<double> in_sample_depths(const ReferenceSet& ref, const DepthSpec& spec) {
  std::vector<double> depths(ref.size());
  parallel_for(ref.size(), [&](std::size_t i) {
    const Eigen::VectorXd query = ref.points().row(static_cast<Eigen::Index>(i)).transpose();
    depths[i] = depth(query, ref, spec, salt_for_reference_row(i));
  });
  return depths;
}

void populate_depth_cache(ReferenceSet& ref, const DepthSpec& spec) {
  if (ref.cached_depths(spec.cache_key()) != nullptr) return;
  ref.set_depth_cache(spec.cache_key(), in_sample_depths(ref, spec));
}

}  // namespace depthwatch
