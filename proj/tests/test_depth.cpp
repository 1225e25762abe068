#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "depthwatch/depth.hpp"
#include "depthwatch/errors.hpp"
#include "depthwatch/rng.hpp"

using namespace depthwatch;

namespace {

ReferenceSet make_ref(const Eigen::MatrixXd& pts, int label = 1) {
  return ReferenceSet::build(pts, label);
}

Eigen::MatrixXd random_cloud(int n, int k, std::uint64_t seed, double spread = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd pts(n, k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) pts(i, j) = spread * rng.normal();
  }
  return pts;
}

// Independent oracle: count open intervals (pairs) strictly containing q.
double simplicial_1d_oracle(const Eigen::MatrixXd& pts, double q) {
  const int n = static_cast<int>(pts.rows());
  long contained = 0, total = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      ++total;
      const double lo = std::min(pts(a, 0), pts(b, 0));
      const double hi = std::max(pts(a, 0), pts(b, 0));
      if (lo < q && q < hi) ++contained;
    }
  }
  return static_cast<double>(contained) / static_cast<double>(total);
}

// Independent oracle: barycentric point-in-triangle with a 2x2 solve.
double simplicial_2d_oracle(const Eigen::MatrixXd& pts, const Eigen::Vector2d& q) {
  const int n = static_cast<int>(pts.rows());
  long contained = 0, total = 0;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      for (int c = b + 1; c < n; ++c) {
        ++total;
        Eigen::Matrix2d m;
        m.col(0) = (pts.row(b) - pts.row(a)).transpose();
        m.col(1) = (pts.row(c) - pts.row(a)).transpose();
        const double det = m.determinant();
        if (det == 0.0) continue;  // degenerate triangle: empty interior
        const Eigen::Vector2d rhs = q - pts.row(a).transpose();
        const Eigen::Vector2d lambda = m.inverse() * rhs;
        const double l0 = 1.0 - lambda(0) - lambda(1);
        if (lambda(0) > 0.0 && lambda(1) > 0.0 && l0 > 0.0) ++contained;
      }
    }
  }
  return static_cast<double>(contained) / static_cast<double>(total);
}

// Independent oracle: barycentric point-in-tetrahedron with a 3x3 solve.
double simplicial_3d_oracle(const Eigen::MatrixXd& pts, const Eigen::Vector3d& q) {
  const int n = static_cast<int>(pts.rows());
  long contained = 0, total = 0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          ++total;
          Eigen::Matrix3d m;
          m.col(0) = (pts.row(b) - pts.row(a)).transpose();
          m.col(1) = (pts.row(c) - pts.row(a)).transpose();
          m.col(2) = (pts.row(d) - pts.row(a)).transpose();
          if (m.determinant() == 0.0) continue;
          const Eigen::Vector3d lambda = m.inverse() * (q - pts.row(a).transpose());
          const double l0 = 1.0 - lambda.sum();
          if (lambda(0) > 0.0 && lambda(1) > 0.0 && lambda(2) > 0.0 && l0 > 0.0) ++contained;
        }
  return static_cast<double>(contained) / static_cast<double>(total);
}

// Independent one-direction outlyingness used by the grid oracles.
double oracle_median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double oracle_outlyingness(const Eigen::MatrixXd& pts, const Eigen::VectorXd& q,
                           const Eigen::VectorXd& dir, bool symmetric) {
  std::vector<double> proj(static_cast<std::size_t>(pts.rows()));
  for (Eigen::Index i = 0; i < pts.rows(); ++i) proj[static_cast<std::size_t>(i)] = pts.row(i).dot(dir);
  const double med = oracle_median(proj);
  const double pq = q.dot(dir);
  if (symmetric) {
    std::vector<double> dev(proj.size());
    for (std::size_t i = 0; i < proj.size(); ++i) dev[i] = std::abs(proj[i] - med);
    const double mad = oracle_median(dev);
    if (mad <= 0.0) return std::abs(pq - med) > 0.0 ? INFINITY : 0.0;
    return std::abs(pq - med) / mad;
  }
  std::vector<double> up;
  for (double p : proj) {
    if (p - med > 0.0) up.push_back(p - med);
  }
  const double num = std::max(pq - med, 0.0);
  if (up.empty()) return num > 0.0 ? INFINITY : 0.0;
  const double scale = oracle_median(up);
  if (scale <= 0.0) return num > 0.0 ? INFINITY : 0.0;
  return num / scale;
}

double pd_grid_depth(const Eigen::MatrixXd& pts, const Eigen::VectorXd& q, bool symmetric,
                     int grid = 3600) {
  double worst = 0.0;
  for (int g = 0; g < grid; ++g) {
    const double theta = 2.0 * std::numbers::pi * g / grid;
    Eigen::VectorXd dir(2);
    dir << std::cos(theta), std::sin(theta);
    worst = std::max(worst, oracle_outlyingness(pts, q, dir, symmetric));
  }
  return std::isinf(worst) ? 0.0 : 1.0 / (1.0 + worst);
}

}  // namespace

TEST_CASE("mahalanobis depth: mean, hand value, affine invariance") {
  Eigen::MatrixXd pts(3, 1);
  pts << -1, 0, 1;
  const auto ref = make_ref(pts);

  // independent one-liner: sample variance of {-1,0,1}
  const double var = ((-1.0) * (-1.0) + 0.0 + 1.0) / 2.0;
  CHECK(var == doctest::Approx(1.0));

  Eigen::VectorXd mean_q(1), far_q(1);
  mean_q << 0.0;
  far_q << 2.0;
  CHECK(mahalanobis_depth(mean_q, ref) == doctest::Approx(1.0));
  CHECK(mahalanobis_depth(far_q, ref) == doctest::Approx(1.0 / (1.0 + 4.0 / var)));

  // affine invariance in 3-D
  const auto cloud = random_cloud(40, 3, 99);
  const auto ref3 = make_ref(cloud);
  Eigen::Matrix3d a;
  a << 2, 0.5, 0, -1, 1, 0.25, 0.1, 0, 3;
  Eigen::Vector3d b(1, -2, 0.5);
  Eigen::MatrixXd mapped = (cloud * a.transpose()).rowwise() + b.transpose();
  const auto ref_mapped = make_ref(mapped);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd q(3);
    q << rng.normal() * 2, rng.normal() * 2, rng.normal() * 2;
    const Eigen::VectorXd qm = a * q + b;
    CHECK(mahalanobis_depth(q, ref3) ==
          doctest::Approx(mahalanobis_depth(qm, ref_mapped)).epsilon(0).scale(1).epsilon(1e-9));
  }
}

TEST_CASE("mahalanobis depth decreases away from the mean") {
  const auto ref = make_ref(random_cloud(60, 3, 17));
  Rng rng(3);
  Eigen::VectorXd dir(3);
  dir << rng.normal(), rng.normal(), rng.normal();
  dir.normalize();
  double prev = 2.0;
  for (double t = 0.0; t <= 5.0; t += 0.25) {
    const double d = mahalanobis_depth(ref.mean_vec() + t * dir, ref);
    CHECK(d <= prev + 1e-12);
    prev = d;
  }
}

TEST_CASE("simplicial depth 1-D matches enumeration") {
  Eigen::MatrixXd pts(4, 1);
  pts << 0, 1, 2, 3;
  const auto ref = make_ref(pts);
  Eigen::VectorXd q(1);
  q << 1.5;
  CHECK(simplicial_depth(q, ref) == doctest::Approx(4.0 / 6.0));
  CHECK(simplicial_depth(q, ref) == doctest::Approx(simplicial_1d_oracle(pts, 1.5)));

  q << 10.0;  // outside the hull
  CHECK(simplicial_depth(q, ref) == 0.0);

  // larger random fixture, exact agreement
  const auto cloud = random_cloud(40, 1, 21);
  const auto ref2 = make_ref(cloud);
  Rng rng(8);
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd query(1);
    query << rng.normal();
    CHECK(simplicial_depth(query, ref2) ==
          doctest::Approx(simplicial_1d_oracle(cloud, query(0))).epsilon(1e-15));
  }
}

TEST_CASE("simplicial depth 2-D matches the barycentric oracle exactly") {
  // three non-collinear points form exactly one simplex
  Eigen::MatrixXd tri(3, 2);
  tri << 0, 0, 1, 0, 0, 1;
  Eigen::VectorXd centroid(2);
  centroid << 1.0 / 3.0, 1.0 / 3.0;
  CHECK(simplicial_depth(centroid, tri) == doctest::Approx(1.0));

  Eigen::VectorXd outside(2);
  outside << 5, 5;
  CHECK(simplicial_depth(outside, tri) == 0.0);

  const auto cloud = random_cloud(25, 2, 31);
  const auto ref2 = make_ref(cloud);
  Rng rng(9);
  for (int t = 0; t < 12; ++t) {
    Eigen::Vector2d q(rng.normal(), rng.normal());
    CHECK(simplicial_depth(q, ref2) == doctest::Approx(simplicial_2d_oracle(cloud, q)));
  }
}

TEST_CASE("simplicial depth 3-D matches the barycentric oracle") {
  const auto cloud = random_cloud(14, 3, 41);
  const auto ref = make_ref(cloud);
  Rng rng(10);
  for (int t = 0; t < 8; ++t) {
    Eigen::Vector3d q(rng.normal(), rng.normal(), rng.normal());
    CHECK(simplicial_depth(q, ref) == doctest::Approx(simplicial_3d_oracle(cloud, q)));
  }
}

TEST_CASE("simplicial depth rejects k > 3 and degenerate data counts nothing") {
  const auto cloud4 = random_cloud(10, 4, 3);
  const auto ref4 = make_ref(cloud4);
  Eigen::VectorXd q4 = Eigen::VectorXd::Zero(4);
  CHECK_THROWS_AS((void)simplicial_depth(q4, ref4), NumericError);

  // collinear 2-D points: every triangle is degenerate
  Eigen::MatrixXd line(6, 2);
  for (int i = 0; i < 6; ++i) {
    line(i, 0) = i;
    line(i, 1) = 2.0 * i;
  }
  // build() would reject the singular covariance, so ridge it
  const auto ref_line = ReferenceSet::build(line, 1, true);
  Eigen::VectorXd q(2);
  q << 2.5, 5.0;
  CHECK(simplicial_depth(q, ref_line) == 0.0);
}

TEST_CASE("robust halfspace depth near 0.5 at the center of a symmetric cloud") {
  // symmetric ring plus center point
  const int n = 40;
  Eigen::MatrixXd pts(n + 1, 2);
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n;
    pts(i, 0) = std::cos(theta);
    pts(i, 1) = std::sin(theta);
  }
  pts(n, 0) = 0.0;
  pts(n, 1) = 0.0;
  const auto ref = make_ref(pts);

  DepthSpec spec = *DepthSpec::parse_method("hdr", 42);
  Eigen::VectorXd center(2);
  center << 0.0, 0.0;
  const double sampled = halfspace_depth_robust(center, ref, spec);
  CHECK(sampled == doctest::Approx(0.5).epsilon(0.1));

  // independent 1-degree grid using the same statistic definition
  double grid_value = 1.0;
  const double nn = static_cast<double>(pts.rows());
  for (int deg = 0; deg < 360; ++deg) {
    const double theta = deg * std::numbers::pi / 180.0;
    Eigen::VectorXd dir(2);
    dir << std::cos(theta), std::sin(theta);
    std::vector<double> proj(static_cast<std::size_t>(pts.rows()));
    double lo = dir.dot(center), hi = lo;
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      proj[static_cast<std::size_t>(i)] = pts.row(i).dot(dir);
      lo = std::min(lo, proj[static_cast<std::size_t>(i)]);
      hi = std::max(hi, proj[static_cast<std::size_t>(i)]);
    }
    double h = (hi - lo) / nn;
    if (h <= 0.0) h = 1e-12;
    double count = 0.0;
    for (double a : proj) count += 1.0 / (1.0 + std::exp(-std::clamp((a - dir.dot(center)) / h, -40.0, 40.0)));
    grid_value = std::min(grid_value, (count + 1.0) / (nn + 2.0));
  }
  CHECK(std::abs(sampled - grid_value) <= 0.05);
}

TEST_CASE("robust halfspace depth: positivity floor, budget monotonicity, determinism") {
  const auto cloud = random_cloud(50, 3, 77);
  const auto ref = make_ref(cloud);
  DepthSpec spec = *DepthSpec::parse_method("hdr", 7);

  Eigen::VectorXd far_q = Eigen::VectorXd::Constant(3, 1e6);
  const double far_depth = halfspace_depth_robust(far_q, ref, spec);
  const double floor = 1.0 / (static_cast<double>(ref.size()) + 2.0);
  CHECK(far_depth >= floor);
  CHECK(far_depth == doctest::Approx(floor).epsilon(1e-6));

  Eigen::VectorXd q(3);
  q << 0.3, -0.2, 0.5;
  DepthSpec small = spec, large = spec;
  small.direction_budget = 100;
  large.direction_budget = 1000;
  const double d_small = halfspace_depth_robust(q, ref, small, 5);
  const double d_large = halfspace_depth_robust(q, ref, large, 5);
  CHECK(d_large <= d_small + 1e-15);  // min over a direction-stream prefix

  CHECK(halfspace_depth_robust(q, ref, spec, 5) == halfspace_depth_robust(q, ref, spec, 5));
}

TEST_CASE("projection depth: median query, grid oracle, reflection symmetry") {
  Eigen::MatrixXd pts(5, 1);
  pts << -2, -1, 0, 1, 2;
  const auto ref1 = make_ref(pts);
  Eigen::VectorXd zero(1);
  zero << 0.0;
  for (const char* method : {"pd1", "pd2", "pd3", "pd1a", "pd2a", "pd3a"}) {
    const DepthSpec spec = *DepthSpec::parse_method(method, 3);
    CHECK(projection_depth(zero, ref1, spec) == doctest::Approx(1.0));
  }

  // 2-D: optimizer within 0.02 of the 3600-direction grid, never above it
  const auto cloud = random_cloud(200, 2, 1234);
  const auto ref2 = make_ref(cloud);
  Rng rng(55);
  for (const char* method : {"pd1", "pd2", "pd3"}) {
    const DepthSpec spec = *DepthSpec::parse_method(method, 11);
    for (int t = 0; t < 5; ++t) {
      Eigen::VectorXd q(2);
      q << 3.0 * rng.normal(), 3.0 * rng.normal();
      const double opt = projection_depth(q, ref2, spec, static_cast<std::uint64_t>(t));
      const double grid = pd_grid_depth(cloud, q, true);
      CHECK(opt >= grid - 0.02);
      CHECK(opt <= grid + 1e-9);
    }
  }

  // centrally symmetric reference: depth(q) == depth(2*mu - q) for the
  // symmetric variant
  Eigen::MatrixXd sym(60, 2);
  Rng srng(1001);
  for (int i = 0; i < 30; ++i) {
    const double x = srng.normal(), y = srng.normal();
    sym(2 * i, 0) = 1.0 + x;
    sym(2 * i, 1) = -0.5 + y;
    sym(2 * i + 1, 0) = 1.0 - x;
    sym(2 * i + 1, 1) = -0.5 - y;
  }
  const auto ref_sym = make_ref(sym);
  Eigen::VectorXd mu(2);
  mu << 1.0, -0.5;
  for (const char* method : {"pd1", "pd2"}) {
    const DepthSpec spec = *DepthSpec::parse_method(method, 21);
    Eigen::VectorXd q(2);
    q << 2.5, 1.0;
    const Eigen::VectorXd reflected = 2.0 * mu - q;
    const double d1 = projection_depth(q, ref_sym, spec, 9);
    const double d2 = projection_depth(reflected, ref_sym, spec, 9);
    CHECK(std::abs(d1 - d2) <= 2.0 * spec.convergence_tol);
  }
}

TEST_CASE("projection depth: zero scale gives the documented limits") {
  Eigen::MatrixXd pts(5, 1);
  pts << 1, 1, 1, 1, 2;  // MAD = 0, upward deviations = {1}
  const auto ref = ReferenceSet::build(pts, 1, true);
  Eigen::VectorXd q(1);
  q << 3.0;
  const DepthSpec sym = *DepthSpec::parse_method("pd2", 5);
  CHECK(projection_depth(q, ref, sym) == 0.0);  // infinite outlyingness
  const DepthSpec asym = *DepthSpec::parse_method("pd2a", 5);
  CHECK(projection_depth(q, ref, asym) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("asymmetric outlyingness is one-sided per direction") {
  // skewed 1-D sample: long upper tail
  Eigen::MatrixXd pts(9, 1);
  pts << 0, 0.1, 0.2, 0.3, 0.4, 0.5, 2.0, 4.0, 8.0;
  Eigen::VectorXd up(1), below(1), above(1);
  up << 1.0;
  below << -8.0;
  above << 8.5;
  // along +e1 only upward deviations count
  CHECK(projection_outlyingness(up, below, pts, ProjectionVariant::Asymmetric) == 0.0);
  CHECK(projection_outlyingness(up, above, pts, ProjectionVariant::Asymmetric) > 0.0);
  // the supremum over directions still catches the low-side outlier via -e1
  const auto ref = make_ref(pts);
  const DepthSpec asym = *DepthSpec::parse_method("pd2a", 5);
  CHECK(projection_depth(below, ref, asym) < 0.1);
  CHECK(projection_depth(above, ref, asym) < 0.3);
  // the upper tail makes upward outlyingness milder than downward:
  // the skew direction tolerates the high query more than the low one
  CHECK(projection_depth(above, ref, asym) > projection_depth(below, ref, asym));
}

TEST_CASE("depth dispatch is deterministic given spec and salt") {
  const auto cloud = random_cloud(50, 2, 3);
  auto ref = make_ref(cloud);
  Eigen::VectorXd q(2);
  q << 0.7, -0.1;
  for (const char* method : {"md", "sd", "hdr", "pd1", "pd2", "pd3", "pd2a"}) {
    const DepthSpec spec = *DepthSpec::parse_method(method, 1729);
    const double a = depth(q, ref, spec, 3);
    const double b = depth(q, ref, spec, 3);
    CHECK(a == b);
    CHECK(a >= 0.0);
    CHECK(a <= 1.0);
  }
}

TEST_CASE("in-sample depths are parallel-stable and cache correctly") {
  const auto cloud = random_cloud(60, 2, 8);
  auto ref = make_ref(cloud);
  const DepthSpec spec = *DepthSpec::parse_method("hdr", 99);
  const auto a = in_sample_depths(ref, spec);
  const auto b = in_sample_depths(ref, spec);
  CHECK(a == b);

  // serial reference computation with the same salts
  for (std::size_t i = 0; i < 5; ++i) {
    const Eigen::VectorXd q = ref.points().row(static_cast<Eigen::Index>(i)).transpose();
    CHECK(a[i] == halfspace_depth_robust(q, ref, spec, salt_for_reference_row(i)));
  }

  populate_depth_cache(ref, spec);
  REQUIRE(ref.cached_depths(spec.cache_key()) != nullptr);
  CHECK(*ref.cached_depths(spec.cache_key()) == a);
  CHECK(ref.cached_depths("other") == nullptr);
}

TEST_CASE("method labels round-trip") {
  for (const char* method : {"md", "sd", "hdr", "pd1", "pd2", "pd3", "pd1a", "pd2a", "pd3a"}) {
    const auto spec = DepthSpec::parse_method(method, 0);
    REQUIRE(spec.has_value());
    CHECK(spec->method_label() == method);
  }
  CHECK(!DepthSpec::parse_method("pd4", 0).has_value());
  CHECK(!DepthSpec::parse_method("bogus", 0).has_value());
}
