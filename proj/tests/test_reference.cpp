#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "depthwatch/errors.hpp"
#include "depthwatch/reference.hpp"
#include "depthwatch/rng.hpp"

using namespace depthwatch;

namespace {

EmbeddingRecord make_record(std::size_t index, int true_label, int predicted, double conf,
                            Phase phase = Phase::PhaseI, int dim = 2) {
  EmbeddingRecord rec;
  rec.index = index;
  rec.embedding = Eigen::VectorXd::Zero(dim);
  Rng rng(index * 7919 + 13);
  for (int j = 0; j < dim; ++j) rec.embedding(j) = rng.normal() + true_label;
  rec.true_label = true_label;
  rec.predicted_label = predicted;
  const int v = std::max(2, std::max(true_label, predicted));
  Eigen::VectorXd sm = Eigen::VectorXd::Constant(v, (1.0 - conf) / (v - 1));
  sm(true_label - 1) = conf;
  rec.softmax = sm;
  rec.phase = phase;
  return rec;
}

std::vector<EmbeddingRecord> class_pool(int label, std::size_t count, std::size_t index0) {
  std::vector<EmbeddingRecord> out;
  Rng rng(label * 1000003);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(make_record(index0 + i, label, label, 0.5 + 0.5 * rng.uniform()));
  }
  return out;
}

}  // namespace

TEST_CASE("validate_phase1 keeps matches and reports removals") {
  auto a = make_record(0, 1, 1, 0.9);
  auto b = make_record(1, 2, 1, 0.8);  // misclassified
  auto c = make_record(2, 2, 2, 0.7);
  const auto out = validate_phase1({a, b, c});
  CHECK(out.kept.size() == 2);
  CHECK(out.removed == 1);
  CHECK(out.kept[0].index == 0);
  CHECK(out.kept[1].index == 2);

  // all correct -> identity
  const auto all = validate_phase1({a, c});
  CHECK(all.kept.size() == 2);
  CHECK(all.removed == 0);
}

TEST_CASE("validate_phase1 rejects wrong phases and missing labels") {
  auto bad_phase = make_record(0, 1, 1, 0.9, Phase::PhaseII_InControl);
  CHECK_THROWS_AS((void)validate_phase1({bad_phase}), DataError);
  auto no_label = make_record(1, 1, 1, 0.9);
  no_label.true_label.reset();
  CHECK_THROWS_AS((void)validate_phase1({no_label}), DataError);
}

TEST_CASE("confidence builder takes the top scores with index tie-break") {
  // 1-D embeddings so small |R| values satisfy |R| >= k + 2
  std::vector<EmbeddingRecord> pool = {
      make_record(0, 1, 1, 0.9, Phase::PhaseI, 1),
      make_record(1, 1, 1, 0.7, Phase::PhaseI, 1),
      make_record(2, 1, 1, 0.99, Phase::PhaseI, 1),
      make_record(3, 1, 1, 0.6, Phase::PhaseI, 1),
      make_record(4, 1, 1, 0.55, Phase::PhaseI, 1),
  };
  const auto top3 = build_reference_by_confidence(pool, 1, 3);
  CHECK(top3.source_indices() == std::vector<std::size_t>{2, 0, 1});

  // tie at 0.9 between indices 4 and 7: the lower stream index wins
  std::vector<EmbeddingRecord> tied = {
      make_record(7, 1, 1, 0.9, Phase::PhaseI, 1),
      make_record(4, 1, 1, 0.9, Phase::PhaseI, 1),
      make_record(9, 1, 1, 0.1, Phase::PhaseI, 1),
      make_record(11, 1, 1, 0.1, Phase::PhaseI, 1),
  };
  const auto top = build_reference_by_confidence(tied, 1, 4);
  CHECK(top.source_indices()[0] == 4);

  // whole class when size equals the pool
  const auto whole = build_reference_by_confidence(pool, 1, 5);
  CHECK(whole.size() == 5);

  CHECK_THROWS_WITH_AS((void)build_reference_by_confidence(pool, 1, 9),
                       doctest::Contains("only 5"), DataError);
}

TEST_CASE("confidence builder is invariant to input ordering") {
  auto pool = class_pool(1, 40, 0);
  auto shuffled = pool;
  std::reverse(shuffled.begin(), shuffled.end());
  const auto a = build_reference_by_confidence(pool, 1, 12);
  const auto b = build_reference_by_confidence(shuffled, 1, 12);
  auto sa = a.source_indices();
  auto sb = b.source_indices();
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  CHECK(sa == sb);
}

TEST_CASE("random builder is deterministic and seed-sensitive") {
  const auto pool = class_pool(1, 2000, 0);
  const auto a = build_reference_random(pool, 1, 100, 42);
  const auto b = build_reference_random(pool, 1, 100, 42);
  CHECK(a.source_indices() == b.source_indices());

  const auto c = build_reference_random(pool, 1, 100, 43);
  CHECK(a.source_indices() != c.source_indices());

  // size = class size -> everything, any seed
  const auto small_pool = class_pool(1, 25, 0);
  const auto whole1 = build_reference_random(small_pool, 1, 25, 1);
  const auto whole2 = build_reference_random(small_pool, 1, 25, 999);
  auto s1 = whole1.source_indices();
  auto s2 = whole2.source_indices();
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  CHECK(s1 == s2);

  CHECK_THROWS_AS((void)build_reference_random(small_pool, 1, 26, 1), DataError);
}

TEST_CASE("merged builder balances classes with the remainder to earliest") {
  auto pool = class_pool(1, 100, 0);
  auto c2 = class_pool(2, 100, 100);
  pool.insert(pool.end(), c2.begin(), c2.end());

  const auto merged = build_reference_merged(pool, 140);
  CHECK(merged.label() == kMergedClass);
  CHECK(merged.size() == 140);
  std::size_t from1 = 0;
  for (auto idx : merged.source_indices()) {
    if (idx < 100) ++from1;
  }
  CHECK(from1 == 70);

  // 3 classes, size 4 -> 2 + 1 + 1
  auto three = class_pool(1, 10, 0);
  auto t2 = class_pool(2, 10, 10);
  auto t3 = class_pool(3, 10, 20);
  three.insert(three.end(), t2.begin(), t2.end());
  three.insert(three.end(), t3.begin(), t3.end());
  const auto four = build_reference_merged(three, 4);
  std::map<int, int> counts;
  for (auto idx : four.source_indices()) counts[static_cast<int>(idx / 10) + 1]++;
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 1);
  CHECK(counts[3] == 1);

  // size = total -> everything
  const auto whole = build_reference_merged(three, 30);
  CHECK(whole.size() == 30);

  CHECK_THROWS_AS((void)build_reference_merged(three, 31), DataError);
}

TEST_CASE("merged class counts never differ by more than one") {
  auto pool = class_pool(1, 50, 0);
  auto c2 = class_pool(2, 50, 50);
  auto c3 = class_pool(3, 50, 100);
  pool.insert(pool.end(), c2.begin(), c2.end());
  pool.insert(pool.end(), c3.begin(), c3.end());
  for (std::size_t size : {7u, 20u, 99u, 150u}) {
    const auto merged = build_reference_merged(pool, size);
    std::map<int, std::size_t> counts;
    for (auto idx : merged.source_indices()) counts[static_cast<int>(idx / 50)]++;
    std::size_t lo = size, hi = 0;
    for (auto& [cls, n] : counts) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
    CHECK(hi - lo <= 1);
  }
}

TEST_CASE("reference set validates geometry and caches") {
  // too few rows for the dimension
  Eigen::MatrixXd thin(3, 2);
  thin << 0, 0, 1, 0, 0, 1;
  CHECK_THROWS_AS((void)ReferenceSet::build(thin, 1), NumericError);

  // rank-deficient covariance: error without the ridge, usable with it
  Eigen::MatrixXd flat(10, 2);
  for (int i = 0; i < 10; ++i) {
    flat(i, 0) = i;
    flat(i, 1) = 2.0 * i + 1.0;
  }
  CHECK_THROWS_AS((void)ReferenceSet::build(flat, 1), NumericError);
  const auto ridged = ReferenceSet::build(flat, 1, true);
  CHECK(ridged.ridged());
  CHECK(ridged.inv_cov().allFinite());

  // non-finite entries
  Eigen::MatrixXd bad = flat;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS((void)ReferenceSet::build(bad, 1, true), NumericError);

  // mean and inverse covariance match a hand computation
  Eigen::MatrixXd pts(4, 1);
  pts << 0, 1, 2, 3;
  const auto ref = ReferenceSet::build(pts, 1);
  CHECK(ref.mean_vec()(0) == doctest::Approx(1.5));
  const double var = ((1.5 * 1.5) + (0.5 * 0.5) + (0.5 * 0.5) + (1.5 * 1.5)) / 3.0;
  CHECK(ref.inv_cov()(0, 0) == doctest::Approx(1.0 / var));
}
