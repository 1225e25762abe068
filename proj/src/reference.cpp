#include "depthwatch/reference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "depthwatch/errors.hpp"
#include "depthwatch/rng.hpp"

namespace depthwatch {

namespace {

// Confidence of a validated record = softmax entry of its (true) class.
double confidence_of(const EmbeddingRecord& rec) {
  if (!rec.softmax.has_value()) {
    throw DataError("record " + std::to_string(rec.index) +
                    ": softmax scores required for confidence-ranked reference building");
  }
  const int cls = rec.true_label.value_or(rec.predicted_label);
  const Eigen::VectorXd& sm = *rec.softmax;
  if (cls < 1 || cls > sm.size()) {
    throw DataError("record " + std::to_string(rec.index) + ": class " + std::to_string(cls) +
                    " has no softmax column (v = " + std::to_string(sm.size()) + ")");
  }
  return sm(cls - 1);
}

std::vector<const EmbeddingRecord*> records_of_class(const std::vector<EmbeddingRecord>& records,
                                                     int class_label) {
  std::vector<const EmbeddingRecord*> out;
  for (const auto& rec : records) {
    if (rec.true_label.has_value() && *rec.true_label == class_label) out.push_back(&rec);
  }
  return out;
}

// Indices into `pool` of the `size` highest-confidence records, ties by
// lower stream index.
std::vector<const EmbeddingRecord*> top_confidence(std::vector<const EmbeddingRecord*> pool,
                                                   std::size_t size) {
  std::stable_sort(pool.begin(), pool.end(),
                   [](const EmbeddingRecord* a, const EmbeddingRecord* b) {
                     const double ca = confidence_of(*a);
                     const double cb = confidence_of(*b);
                     if (ca != cb) return ca > cb;
                     return a->index < b->index;
                   });
  pool.resize(size);
  return pool;
}

Eigen::MatrixXd stack_embeddings(const std::vector<const EmbeddingRecord*>& recs) {
  if (recs.empty()) throw DataError("cannot build a reference set from zero records");
  const Eigen::Index k = recs.front()->embedding.size();
  Eigen::MatrixXd points(static_cast<Eigen::Index>(recs.size()), k);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (recs[i]->embedding.size() != k) {
      throw DataError("record " + std::to_string(recs[i]->index) + ": embedding dimension mismatch");
    }
    points.row(static_cast<Eigen::Index>(i)) = recs[i]->embedding.transpose();
  }
  return points;
}

std::vector<std::size_t> stream_indices(const std::vector<const EmbeddingRecord*>& recs) {
  std::vector<std::size_t> out;
  out.reserve(recs.size());
  for (const auto* rec : recs) out.push_back(rec->index);
  return out;
}

}  // namespace

ReferenceSet ReferenceSet::build(Eigen::MatrixXd points, int class_label, bool ridge_fallback,
                                 std::vector<std::size_t> source_indices) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = points.cols();
  if (k < 1) throw NumericError("reference set needs at least one dimension");
  if (n < k + 2) {
    throw NumericError("reference set for class " + class_token(class_label) + " has " +
                       std::to_string(n) + " points; need at least k + 2 = " +
                       std::to_string(k + 2));
  }
  if (!points.allFinite()) {
    throw NumericError("reference set for class " + class_token(class_label) +
                       " contains non-finite values");
  }

  ReferenceSet ref;
  ref.label_ = class_label;
  ref.mean_ = points.colwise().mean();
  Eigen::MatrixXd centered = points.rowwise() - ref.mean_.transpose();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);

  auto try_invert = [&](const Eigen::MatrixXd& m, Eigen::MatrixXd& out) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-12);
    if (!lu.isInvertible()) return false;
    out = lu.inverse();
    return out.allFinite();
  };

  if (!try_invert(cov, ref.inv_cov_)) {
    if (!ridge_fallback) {
      throw NumericError("singular sample covariance for class " + class_token(class_label) +
                         " (enable the ridge fallback to regularize)");
    }
    const double eps = 1e-8 * cov.trace() / static_cast<double>(k);
    cov.diagonal().array() += (eps > 0.0 ? eps : 1e-12);
    if (!try_invert(cov, ref.inv_cov_)) {
      throw NumericError("covariance for class " + class_token(class_label) +
                         " is singular even after the ridge fallback");
    }
    ref.ridged_ = true;
  }
  if (!source_indices.empty() &&
      source_indices.size() != static_cast<std::size_t>(points.rows())) {
    throw NumericError("source_indices length does not match the point count");
  }
  ref.source_indices_ = std::move(source_indices);
  ref.points_ = std::move(points);
  return ref;
}

const std::vector<double>* ReferenceSet::cached_depths(const std::string& spec_key) const {
  if (cache_key_ == spec_key && !cache_values_.empty()) return &cache_values_;
  return nullptr;
}

void ReferenceSet::set_depth_cache(std::string spec_key, std::vector<double> depths) {
  if (depths.size() != size()) {
    throw NumericError("depth cache size " + std::to_string(depths.size()) +
                       " does not match reference size " + std::to_string(size()));
  }
  cache_key_ = std::move(spec_key);
  cache_values_ = std::move(depths);
}

Phase1Validation validate_phase1(const std::vector<EmbeddingRecord>& records) {
  Phase1Validation result;
  result.kept.reserve(records.size());
  for (const auto& rec : records) {
    if (rec.phase != Phase::PhaseI) {
      throw DataError("record " + std::to_string(rec.index) + ": expected phase1, got " +
                      to_token(rec.phase));
    }
    if (!rec.true_label.has_value()) {
      throw DataError("record " + std::to_string(rec.index) + ": Phase I requires a true label");
    }
    if (*rec.true_label == rec.predicted_label) {
      result.kept.push_back(rec);
    } else {
      ++result.removed;
    }
  }
  return result;
}

ReferenceSet build_reference_by_confidence(const std::vector<EmbeddingRecord>& validated,
                                           int class_label, std::size_t size,
                                           bool ridge_fallback) {
  auto pool = records_of_class(validated, class_label);
  if (pool.size() < size) {
    throw DataError("class " + class_token(class_label) + " has only " +
                    std::to_string(pool.size()) + " validated records; requested |R| = " +
                    std::to_string(size));
  }
  auto chosen = top_confidence(std::move(pool), size);
  return ReferenceSet::build(stack_embeddings(chosen), class_label, ridge_fallback,
                             stream_indices(chosen));
}

ReferenceSet build_reference_random(const std::vector<EmbeddingRecord>& validated,
                                    int class_label, std::size_t size, std::uint64_t seed,
                                    bool ridge_fallback) {
  auto pool = records_of_class(validated, class_label);
  if (pool.size() < size) {
    throw DataError("class " + class_token(class_label) + " has only " +
                    std::to_string(pool.size()) + " validated records; requested |R| = " +
                    std::to_string(size));
  }
  // Sort by stream index first so the draw depends on the seed, not on the
  // caller's record ordering.
  std::sort(pool.begin(), pool.end(),
            [](const EmbeddingRecord* a, const EmbeddingRecord* b) { return a->index < b->index; });
  Rng rng(derive_seed(seed, seed_tag::kReferenceSample,
                      static_cast<std::uint64_t>(class_label + 1)));
  const auto picks = rng.sample_without_replacement(pool.size(), size);
  std::vector<const EmbeddingRecord*> chosen;
  chosen.reserve(size);
  for (std::size_t idx : picks) chosen.push_back(pool[idx]);
  return ReferenceSet::build(stack_embeddings(chosen), class_label, ridge_fallback,
                             stream_indices(chosen));
}

ReferenceSet build_reference_merged(const std::vector<EmbeddingRecord>& validated,
                                    std::size_t size, bool ridge_fallback) {
  const auto labels = class_labels(validated);
  if (labels.empty()) throw DataError("no validated records to merge");
  if (validated.size() < size) {
    throw DataError("merged reference requested |R| = " + std::to_string(size) + " but only " +
                    std::to_string(validated.size()) + " validated records exist");
  }
  const std::size_t v = labels.size();
  const std::size_t base = size / v;
  const std::size_t remainder = size % v;

  std::vector<const EmbeddingRecord*> chosen;
  chosen.reserve(size);
  for (std::size_t c = 0; c < v; ++c) {
    const std::size_t quota = base + (c < remainder ? 1 : 0);
    if (quota == 0) continue;
    auto pool = records_of_class(validated, labels[c]);
    if (pool.size() < quota) {
      throw DataError("class " + class_token(labels[c]) + " has only " +
                      std::to_string(pool.size()) + " validated records; merged quota is " +
                      std::to_string(quota));
    }
    auto top = top_confidence(std::move(pool), quota);
    chosen.insert(chosen.end(), top.begin(), top.end());
  }
  return ReferenceSet::build(stack_embeddings(chosen), kMergedClass, ridge_fallback,
                             stream_indices(chosen));
}

std::vector<int> class_labels(const std::vector<EmbeddingRecord>& records) {
  std::set<int> labels;
  for (const auto& rec : records) {
    if (rec.true_label.has_value()) labels.insert(*rec.true_label);
  }
  return {labels.begin(), labels.end()};
}

}  // namespace depthwatch
