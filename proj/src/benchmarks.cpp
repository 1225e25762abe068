#include "depthwatch/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "depthwatch/errors.hpp"
#include "depthwatch/rng.hpp"
#include "depthwatch/stats.hpp"

namespace depthwatch {

namespace {

// Pairwise distances within the reference set plus, per point, the other
// indices sorted by (distance, index). Shared by LOF, KDEOS and NOF.
struct NeighborTable {
  Eigen::MatrixXd dist;                   // n x n, zero diagonal
  std::vector<std::vector<int>> order;    // per row, n-1 sorted neighbor ids
  double max_distance = 0.0;

  explicit NeighborTable(const Eigen::MatrixXd& pts) {
    const Eigen::Index n = pts.rows();
    dist.resize(n, n);
    dist.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double d = (pts.row(i) - pts.row(j)).norm();
        dist(i, j) = d;
        dist(j, i) = d;
        max_distance = std::max(max_distance, d);
      }
    }
    order.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& row = order[static_cast<std::size_t>(i)];
      row.reserve(static_cast<std::size_t>(n) - 1);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j != i) row.push_back(static_cast<int>(j));
      }
      std::sort(row.begin(), row.end(), [&](int a, int b) {
        const double da = dist(i, a), db = dist(i, b);
        if (da != db) return da < db;
        return a < b;
      });
    }
  }

  int size() const { return static_cast<int>(dist.rows()); }
};

std::vector<int> sorted_query_neighbors(const Eigen::VectorXd& query, const Eigen::MatrixXd& pts,
                                        std::vector<double>& dists) {
  const Eigen::Index n = pts.rows();
  dists.resize(static_cast<std::size_t>(n));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    dists[static_cast<std::size_t>(i)] = (pts.row(i) - query.transpose()).norm();
    order[static_cast<std::size_t>(i)] = static_cast<int>(i);
  }
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (dists[a] != dists[b]) return dists[a] < dists[b];
    return a < b;
  });
  return order;
}

// ---- LOF ----

struct LofModel {
  int k = 1;
  Eigen::MatrixXd points;
  std::shared_ptr<NeighborTable> table;
  std::vector<double> kdist;  // per reference point
  std::vector<double> lrd;    // per reference point

  // Neighborhood of reference point p: everything within its k-distance.
  template <typename Fn>
  void for_each_neighbor(int p, Fn&& fn) const {
    const auto& row = table->order[static_cast<std::size_t>(p)];
    for (int o : row) {
      if (table->dist(p, o) > kdist[static_cast<std::size_t>(p)]) break;
      fn(o, table->dist(p, o));
    }
  }
};

LofModel build_lof(const Eigen::MatrixXd& pts, int k, std::shared_ptr<NeighborTable> table) {
  const int n = static_cast<int>(pts.rows());
  if (k < 1 || k >= n) {
    throw NumericError("LOF: k must satisfy 1 <= k < |R| (k = " + std::to_string(k) +
                       ", |R| = " + std::to_string(n) + ")");
  }
  LofModel model;
  model.k = k;
  model.points = pts;
  model.table = table ? std::move(table) : std::make_shared<NeighborTable>(pts);

  model.kdist.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    const auto& row = model.table->order[static_cast<std::size_t>(p)];
    model.kdist[static_cast<std::size_t>(p)] = model.table->dist(p, row[static_cast<std::size_t>(k - 1)]);
  }
  model.lrd.resize(static_cast<std::size_t>(n));
  for (int p = 0; p < n; ++p) {
    double reach_sum = 0.0;
    std::size_t count = 0;
    model.for_each_neighbor(p, [&](int o, double d) {
      reach_sum += std::max(model.kdist[static_cast<std::size_t>(o)], d);
      ++count;
    });
    model.lrd[static_cast<std::size_t>(p)] =
        reach_sum > 0.0 ? static_cast<double>(count) / reach_sum
                        : std::numeric_limits<double>::infinity();
  }
  return model;
}

double lof_of_reference_point(const LofModel& model, int p) {
  double lrd_sum = 0.0;
  std::size_t count = 0;
  model.for_each_neighbor(p, [&](int o, double) {
    lrd_sum += model.lrd[static_cast<std::size_t>(o)];
    ++count;
  });
  const double lrd_p = model.lrd[static_cast<std::size_t>(p)];
  if (std::isinf(lrd_p)) return 1.0;  // duplicate blob: as dense as its neighbors
  return lrd_sum / static_cast<double>(count) / lrd_p;
}

double lof_of_query(const LofModel& model, const Eigen::VectorXd& query) {
  std::vector<double> dists;
  const auto order = sorted_query_neighbors(query, model.points, dists);
  const double kdist_q = dists[static_cast<std::size_t>(order[static_cast<std::size_t>(model.k - 1)])];
  double reach_sum = 0.0;
  double lrd_sum = 0.0;
  std::size_t count = 0;
  for (int o : order) {
    const double d = dists[static_cast<std::size_t>(o)];
    if (d > kdist_q) break;
    reach_sum += std::max(model.kdist[static_cast<std::size_t>(o)], d);
    lrd_sum += model.lrd[static_cast<std::size_t>(o)];
    ++count;
  }
  const double lrd_q = reach_sum > 0.0 ? static_cast<double>(count) / reach_sum
                                       : std::numeric_limits<double>::infinity();
  if (std::isinf(lrd_q)) return 1.0;
  return lrd_sum / static_cast<double>(count) / lrd_q;
}

// ---- KDEOS ----

double kdeos_kernel_value(KdeosKernel kernel, double distance, double bandwidth, int dim) {
  // Dimension constants are dropped: they rescale query and reference
  // densities alike, and the z-score is invariant to a common factor.
  const double u = distance / bandwidth;
  const double hd = std::pow(bandwidth, dim);
  switch (kernel) {
    case KdeosKernel::Gaussian:
      return std::exp(-0.5 * u * u) / hd;
    case KdeosKernel::Epanechnikov:
      return std::max(0.0, 1.0 - u * u) / hd;
  }
  return 0.0;
}

struct KdeosModel {
  KdeosKernel kernel = KdeosKernel::Gaussian;
  int k_min = 1, k_max = 1;
  int dim = 1;
  Eigen::MatrixXd points;
  std::shared_ptr<NeighborTable> table;
  std::vector<std::vector<double>> bandwidth;  // [k - k_min][point]
  std::vector<double> mu, sigma;               // per k: reference density stats
};

KdeosModel build_kdeos(const Eigen::MatrixXd& pts, KdeosKernel kernel, int k_min, int k_max,
                       std::shared_ptr<NeighborTable> table) {
  const int n = static_cast<int>(pts.rows());
  if (k_min < 1 || k_min > k_max || k_max >= n) {
    throw NumericError("KDEOS: need 1 <= k_min <= k_max < |R|");
  }
  KdeosModel model;
  model.kernel = kernel;
  model.k_min = k_min;
  model.k_max = k_max;
  model.dim = static_cast<int>(pts.cols());
  model.points = pts;
  model.table = table ? std::move(table) : std::make_shared<NeighborTable>(pts);

  const double floor = 1e-12 * std::max(model.table->max_distance, 1.0);
  const int levels = k_max - k_min + 1;
  model.bandwidth.assign(static_cast<std::size_t>(levels), std::vector<double>(n));
  model.mu.resize(static_cast<std::size_t>(levels));
  model.sigma.resize(static_cast<std::size_t>(levels));

  for (int level = 0; level < levels; ++level) {
    const int k = k_min + level;
    auto& bw = model.bandwidth[static_cast<std::size_t>(level)];
    for (int p = 0; p < n; ++p) {
      const auto& row = model.table->order[static_cast<std::size_t>(p)];
      bw[static_cast<std::size_t>(p)] =
          std::max(model.table->dist(p, row[static_cast<std::size_t>(k - 1)]), floor);
    }
    std::vector<double> density(static_cast<std::size_t>(n));
    for (int p = 0; p < n; ++p) {
      const auto& row = model.table->order[static_cast<std::size_t>(p)];
      double sum = 0.0;
      for (int j = 0; j < k; ++j) {
        const int o = row[static_cast<std::size_t>(j)];
        sum += kdeos_kernel_value(kernel, model.table->dist(p, o),
                                  bw[static_cast<std::size_t>(o)], model.dim);
      }
      density[static_cast<std::size_t>(p)] = sum / static_cast<double>(k);
    }
    model.mu[static_cast<std::size_t>(level)] = mean(density);
    model.sigma[static_cast<std::size_t>(level)] =
        density.size() >= 2 ? std::sqrt(sample_variance(density)) : 0.0;
  }
  return model;
}

double kdeos_score_of(const KdeosModel& model, const Eigen::VectorXd& query) {
  std::vector<double> dists;
  const auto order = sorted_query_neighbors(query, model.points, dists);
  double z_sum = 0.0;
  const int levels = model.k_max - model.k_min + 1;
  for (int level = 0; level < levels; ++level) {
    const int k = model.k_min + level;
    const auto& bw = model.bandwidth[static_cast<std::size_t>(level)];
    double sum = 0.0;
    for (int j = 0; j < k; ++j) {
      const int o = order[static_cast<std::size_t>(j)];
      sum += kdeos_kernel_value(model.kernel, dists[static_cast<std::size_t>(o)],
                                bw[static_cast<std::size_t>(o)], model.dim);
    }
    const double density = sum / static_cast<double>(k);
    const double sigma = model.sigma[static_cast<std::size_t>(level)];
    z_sum += sigma > 0.0 ? (density - model.mu[static_cast<std::size_t>(level)]) / sigma : 0.0;
  }
  return -z_sum / static_cast<double>(levels);
}

// ---- NOF ----

// Smallest k at which every point appears in someone's k-neighborhood.
int natural_neighbor_k(const NeighborTable& table, bool* capped) {
  const int n = table.size();
  const int cap = n - 1;
  std::vector<bool> has_reverse(static_cast<std::size_t>(n), false);
  int remaining = n;
  for (int k = 1; k <= cap; ++k) {
    for (int p = 0; p < n; ++p) {
      const int nominee = table.order[static_cast<std::size_t>(p)][static_cast<std::size_t>(k - 1)];
      if (!has_reverse[static_cast<std::size_t>(nominee)]) {
        has_reverse[static_cast<std::size_t>(nominee)] = true;
        --remaining;
      }
    }
    if (remaining == 0) {
      if (capped != nullptr) *capped = (k == cap);
      return k;
    }
  }
  if (capped != nullptr) *capped = true;
  return cap;
}

}  // namespace

std::optional<BenchmarkMethod> benchmark_from_label(std::string_view label) {
  if (label == "lof") return BenchmarkMethod::LOF;
  if (label == "kdeos") return BenchmarkMethod::KDEOS;
  if (label == "iforest") return BenchmarkMethod::IForest;
  if (label == "mdis") return BenchmarkMethod::MDis;
  if (label == "nof") return BenchmarkMethod::NOF;
  return std::nullopt;
}

std::string benchmark_label(BenchmarkMethod method) {
  switch (method) {
    case BenchmarkMethod::LOF: return "lof";
    case BenchmarkMethod::KDEOS: return "kdeos";
    case BenchmarkMethod::IForest: return "iforest";
    case BenchmarkMethod::MDis: return "mdis";
    case BenchmarkMethod::NOF: return "nof";
  }
  return "lof";
}

double score_to_centrality(Orientation orientation, double score) {
  return orientation == Orientation::HigherIsCentral ? score : -score;
}

double lof_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref, int k) {
  const LofModel model = build_lof(ref, k, nullptr);
  return lof_of_query(model, query);
}

double kdeos_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref, KdeosKernel kernel,
                   int k_min, int k_max) {
  const KdeosModel model = build_kdeos(ref, kernel, k_min, k_max, nullptr);
  return kdeos_score_of(model, query);
}

namespace {

// Variance at or below floating dust counts as zero.
bool degenerate_variance(double var, double mean_value) {
  return var <= 1e-24 * std::max(1.0, mean_value * mean_value);
}

}  // namespace

double mdis_score(double query, const std::vector<double>& ref) {
  if (ref.size() < 2) throw NumericError("mdis_score: need at least two reference values");
  const double m = mean(ref);
  const double var = sample_variance(ref);
  if (degenerate_variance(var, m)) throw NumericError("mdis_score: zero reference variance");
  return (query - m) * (query - m) / var;
}

double nof_score(const Eigen::VectorXd& query, const Eigen::MatrixXd& ref, int* natural_k,
                 bool* capped) {
  if (ref.rows() < 3) throw NumericError("nof_score: need |R| >= 3");
  auto table = std::make_shared<NeighborTable>(ref);
  bool hit_cap = false;
  const int lambda = natural_neighbor_k(*table, &hit_cap);
  if (natural_k != nullptr) *natural_k = lambda;
  if (capped != nullptr) *capped = hit_cap;
  const LofModel model = build_lof(ref, lambda, table);
  return lof_of_query(model, query);
}

// ---- Isolation forest ----

namespace {

double average_path_length(int m) {
  if (m <= 1) return 0.0;
  if (m == 2) return 1.0;
  const double h = std::log(static_cast<double>(m - 1)) + std::numbers::egamma;
  return 2.0 * h - 2.0 * static_cast<double>(m - 1) / static_cast<double>(m);
}

int grow_tree(std::vector<IsolationForest::Node>& nodes, const Eigen::MatrixXd& pts,
              std::vector<int>& items, int begin, int end, int depth, int height_limit,
              Rng& rng) {
  const int node_id = static_cast<int>(nodes.size());
  nodes.push_back({});
  nodes[node_id].depth = depth;
  const int size = end - begin;
  if (size <= 1 || depth >= height_limit) {
    nodes[node_id].leaf_adjust = average_path_length(size);
    return node_id;
  }
  // Split on a random attribute that still has spread at this node.
  const int dim = static_cast<int>(pts.cols());
  std::vector<int> usable;
  usable.reserve(static_cast<std::size_t>(dim));
  for (int a = 0; a < dim; ++a) {
    double lo = pts(items[begin], a), hi = lo;
    for (int i = begin + 1; i < end; ++i) {
      lo = std::min(lo, pts(items[i], a));
      hi = std::max(hi, pts(items[i], a));
    }
    if (hi > lo) usable.push_back(a);
  }
  if (usable.empty()) {
    nodes[node_id].leaf_adjust = average_path_length(size);
    return node_id;
  }
  const int attr = usable[static_cast<std::size_t>(rng.bounded(usable.size()))];
  double lo = pts(items[begin], attr), hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = std::min(lo, pts(items[i], attr));
    hi = std::max(hi, pts(items[i], attr));
  }
  const double split = lo + (hi - lo) * rng.uniform();
  int mid = begin;
  for (int i = begin; i < end; ++i) {
    if (pts(items[i], attr) < split) std::swap(items[mid++], items[i]);
  }
  if (mid == begin || mid == end) {
    // Degenerate split (possible when the uniform draw hits an endpoint).
    nodes[node_id].leaf_adjust = average_path_length(size);
    return node_id;
  }
  nodes[node_id].attribute = attr;
  nodes[node_id].split = split;
  const int left = grow_tree(nodes, pts, items, begin, mid, depth + 1, height_limit, rng);
  const int right = grow_tree(nodes, pts, items, mid, end, depth + 1, height_limit, rng);
  nodes[node_id].left = left;
  nodes[node_id].right = right;
  return node_id;
}

}  // namespace

IsolationForest IsolationForest::fit(const Eigen::MatrixXd& ref, int trees, int subsample,
                                     std::uint64_t seed) {
  if (trees < 1) throw NumericError("isolation forest: need at least one tree");
  const int n = static_cast<int>(ref.rows());
  const int psi = std::min(std::max(subsample, 2), n);
  IsolationForest forest;
  forest.c_psi_ = std::max(average_path_length(psi), 1e-12);
  const int height_limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
  forest.trees_.resize(static_cast<std::size_t>(trees));
  for (int t = 0; t < trees; ++t) {
    Rng rng(derive_seed(seed, seed_tag::kIsolationTree, static_cast<std::uint64_t>(t)));
    auto picks = rng.sample_without_replacement(static_cast<std::size_t>(n),
                                                static_cast<std::size_t>(psi));
    std::vector<int> items(picks.begin(), picks.end());
    auto& nodes = forest.trees_[static_cast<std::size_t>(t)];
    nodes.reserve(static_cast<std::size_t>(2 * psi));
    grow_tree(nodes, ref, items, 0, static_cast<int>(items.size()), 0,
              std::max(height_limit, 1), rng);
  }
  return forest;
}

double IsolationForest::score(const Eigen::VectorXd& query) const {
  double path_sum = 0.0;
  for (const auto& nodes : trees_) {
    int id = 0;
    while (nodes[static_cast<std::size_t>(id)].attribute >= 0) {
      const Node& node = nodes[static_cast<std::size_t>(id)];
      id = query(node.attribute) < node.split ? node.left : node.right;
    }
    const Node& leaf = nodes[static_cast<std::size_t>(id)];
    path_sum += static_cast<double>(leaf.depth) + leaf.leaf_adjust;
  }
  const double mean_path = path_sum / static_cast<double>(trees_.size());
  return std::pow(2.0, -mean_path / c_psi_);
}

// ---- Facade ----

struct CentralityScorer::Impl {
  std::optional<LofModel> lof;
  std::optional<KdeosModel> kdeos;
  std::optional<IsolationForest> iforest;
  // MDis state
  double mdis_mean = 0.0;
  double mdis_var = 0.0;
};

CentralityScorer CentralityScorer::fit(BenchmarkMethod method, const ReferenceSet& ref,
                                       const BenchmarkParams& params) {
  CentralityScorer scorer;
  scorer.method_ = method;
  auto impl = std::make_shared<Impl>();
  const Eigen::MatrixXd& pts = ref.points();
  const int n = static_cast<int>(ref.size());

  switch (method) {
    case BenchmarkMethod::LOF: {
      impl->lof = build_lof(pts, params.lof_k, nullptr);
      scorer.in_sample_.resize(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        scorer.in_sample_[static_cast<std::size_t>(p)] = score_to_centrality(
            Orientation::HigherIsOutlying, lof_of_reference_point(*impl->lof, p));
      }
      break;
    }
    case BenchmarkMethod::KDEOS: {
      impl->kdeos = build_kdeos(pts, params.kdeos_kernel, params.kdeos_k_min,
                                params.kdeos_k_max, nullptr);
      scorer.in_sample_.resize(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        // In-sample score of a reference point: treat it as a query of its
        // own leave-one-out neighborhood via the shared table.
        const KdeosModel& m = *impl->kdeos;
        double z_sum = 0.0;
        const int levels = m.k_max - m.k_min + 1;
        for (int level = 0; level < levels; ++level) {
          const int k = m.k_min + level;
          const auto& bw = m.bandwidth[static_cast<std::size_t>(level)];
          const auto& row = m.table->order[static_cast<std::size_t>(p)];
          double sum = 0.0;
          for (int j = 0; j < k; ++j) {
            const int o = row[static_cast<std::size_t>(j)];
            sum += kdeos_kernel_value(m.kernel, m.table->dist(p, o),
                                      bw[static_cast<std::size_t>(o)], m.dim);
          }
          const double density = sum / static_cast<double>(k);
          const double sigma = m.sigma[static_cast<std::size_t>(level)];
          z_sum += sigma > 0.0 ? (density - m.mu[static_cast<std::size_t>(level)]) / sigma : 0.0;
        }
        scorer.in_sample_[static_cast<std::size_t>(p)] =
            score_to_centrality(Orientation::HigherIsOutlying,
                                -z_sum / static_cast<double>(levels));
      }
      break;
    }
    case BenchmarkMethod::IForest: {
      impl->iforest = IsolationForest::fit(pts, params.iforest_trees, params.iforest_subsample,
                                           params.seed);
      scorer.in_sample_.resize(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        scorer.in_sample_[static_cast<std::size_t>(p)] = score_to_centrality(
            Orientation::HigherIsOutlying, impl->iforest->score(pts.row(p).transpose()));
      }
      break;
    }
    case BenchmarkMethod::MDis: {
      if (ref.dim() != 1) {
        throw NumericError("MDis operates on the scalar softmax stream (k = 1)");
      }
      std::vector<double> values(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) values[static_cast<std::size_t>(p)] = pts(p, 0);
      impl->mdis_mean = mean(values);
      impl->mdis_var = sample_variance(values);
      if (degenerate_variance(impl->mdis_var, impl->mdis_mean)) {
        throw NumericError("MDis: zero reference variance");
      }
      scorer.in_sample_.resize(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        const double s =
            (pts(p, 0) - impl->mdis_mean) * (pts(p, 0) - impl->mdis_mean) / impl->mdis_var;
        scorer.in_sample_[static_cast<std::size_t>(p)] =
            score_to_centrality(Orientation::HigherIsOutlying, s);
      }
      break;
    }
    case BenchmarkMethod::NOF: {
      if (n < 3) throw NumericError("NOF: need |R| >= 3");
      auto table = std::make_shared<NeighborTable>(pts);
      bool capped = false;
      scorer.natural_k_ = natural_neighbor_k(*table, &capped);
      scorer.natural_capped_ = capped;
      impl->lof = build_lof(pts, scorer.natural_k_, table);
      scorer.in_sample_.resize(static_cast<std::size_t>(n));
      for (int p = 0; p < n; ++p) {
        scorer.in_sample_[static_cast<std::size_t>(p)] = score_to_centrality(
            Orientation::HigherIsOutlying, lof_of_reference_point(*impl->lof, p));
      }
      break;
    }
  }
  scorer.impl_ = std::move(impl);
  return scorer;
}

double CentralityScorer::score(const Eigen::VectorXd& query) const {
  switch (method_) {
    case BenchmarkMethod::LOF:
    case BenchmarkMethod::NOF:
      return lof_of_query(*impl_->lof, query);
    case BenchmarkMethod::KDEOS:
      return kdeos_score_of(*impl_->kdeos, query);
    case BenchmarkMethod::IForest:
      return impl_->iforest->score(query);
    case BenchmarkMethod::MDis: {
      if (query.size() != 1) throw NumericError("MDis expects a scalar query");
      const double d = query(0) - impl_->mdis_mean;
      return d * d / impl_->mdis_var;
    }
  }
  return 0.0;
}

}  // namespace depthwatch
