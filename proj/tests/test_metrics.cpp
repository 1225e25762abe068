#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "depthwatch/errors.hpp"
#include "depthwatch/metrics.hpp"

using namespace depthwatch;

namespace {

SignalRecord sig(std::size_t index, Phase phase, bool signal, int cls = 1) {
  return {index, cls, signal ? 0.01 : 0.5, signal, phase};
}

std::vector<SignalRecord> phase1_fixture(std::size_t count, std::size_t signals) {
  std::vector<SignalRecord> out;
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sig(i, Phase::PhaseI, i < signals));
  }
  return out;
}

}  // namespace

TEST_CASE("far is the plain mean of the Phase I indicator") {
  CHECK(!far({}).has_value());
  CHECK(far(phase1_fixture(10, 0)) == doctest::Approx(0.0));
  CHECK(far(phase1_fixture(60, 3)) == doctest::Approx(0.05));  // 3 signals in 60
  // non-Phase-I records are outside the FAR cell
  auto mixed = phase1_fixture(20, 1);
  mixed.push_back(sig(100, Phase::PhaseII_InControl, true));
  CHECK(far(mixed) == doctest::Approx(1.0 / 20.0));
}

TEST_CASE("weighted SR equals the pooled proportion") {
  std::vector<SignalRecord> signals;
  // class A: 10 records, 2 signals; class B: 30 records, 3 signals
  for (std::size_t i = 0; i < 10; ++i) signals.push_back(sig(i, Phase::PhaseII_InControl, i < 2, 1));
  for (std::size_t i = 0; i < 30; ++i)
    signals.push_back(sig(10 + i, Phase::PhaseII_InControl, i < 3, 2));
  std::map<int, RateCell> per_class;
  const auto sr = sr_weighted(signals, &per_class);
  REQUIRE(sr.has_value());
  CHECK(*sr == doctest::Approx(0.125));  // (2 + 3) / 40
  CHECK(per_class[1].rate().value() == doctest::Approx(0.2));
  CHECK(per_class[2].rate().value() == doctest::Approx(0.1));

  // the weighted mean identity: sum n_c SR_c / sum n_c
  const double weighted = (10.0 * 0.2 + 30.0 * 0.1) / 40.0;
  CHECK(*sr == doctest::Approx(weighted));

  CHECK(!sr_weighted({}).has_value());
  std::vector<SignalRecord> all;
  for (std::size_t i = 0; i < 7; ++i) all.push_back(sig(i, Phase::PhaseII_InControl, true));
  CHECK(sr_weighted(all) == doctest::Approx(1.0));
}

TEST_CASE("cdr is the proportion over emitted out-of-control records") {
  std::vector<SignalRecord> signals;
  for (std::size_t i = 0; i < 10; ++i) signals.push_back(sig(i, Phase::PhaseII_OutOfControl, true));
  CHECK(cdr(signals) == doctest::Approx(1.0));
  for (auto& s : signals) s.signal = false;
  CHECK(cdr(signals) == doctest::Approx(0.0));
  CHECK(!cdr({}).has_value());
}

TEST_CASE("conditional SR splits by the misclassification mask") {
  std::vector<SignalRecord> signals;
  std::vector<bool> mask;
  // all misclassified signal, no correct record signals
  for (std::size_t i = 0; i < 5; ++i) {
    signals.push_back(sig(i, Phase::PhaseII_InControl, true));
    mask.push_back(true);
  }
  for (std::size_t i = 0; i < 7; ++i) {
    signals.push_back(sig(5 + i, Phase::PhaseII_InControl, false));
    mask.push_back(false);
  }
  const auto [sr_m, sr_c] = conditional_sr(signals, mask);
  CHECK(sr_m.value() == doctest::Approx(1.0));
  CHECK(sr_c.value() == doctest::Approx(0.0));

  // empty misclassified side -> absent value, SR on the other side
  std::vector<bool> none(mask.size(), false);
  const auto [m2, c2] = conditional_sr(signals, none);
  CHECK(!m2.has_value());
  CHECK(c2.value() == doctest::Approx(5.0 / 12.0));

  CHECK_THROWS_AS((void)conditional_sr(signals, std::vector<bool>{true}), DataError);
}

TEST_CASE("conditional rates bracket the overall SR") {
  std::vector<SignalRecord> signals;
  std::vector<bool> mask;
  for (std::size_t i = 0; i < 100; ++i) {
    const bool mis = i % 10 == 0;
    const bool s = mis ? (i % 20 == 0) : (i % 25 == 3);
    signals.push_back(sig(i, Phase::PhaseII_InControl, s));
    mask.push_back(mis);
  }
  const auto sr = sr_weighted(signals).value();
  const auto [m, c] = conditional_sr(signals, mask);
  CHECK(std::min(m.value(), c.value()) <= sr + 1e-12);
  CHECK(sr <= std::max(m.value(), c.value()) + 1e-12);
}

TEST_CASE("large fixture reproduces the reported conditional rates") {
  // 958 misclassified of 10000 in-control records; the signal counts are
  // chosen so the recomputed rates print as 0.96 and 0.42
  std::vector<SignalRecord> signals;
  std::vector<bool> mask;
  std::size_t index = 0;
  const std::size_t mis_total = 958, mis_signals = 920;
  const std::size_t cor_total = 9042, cor_signals = 3798;
  for (std::size_t i = 0; i < mis_total; ++i) {
    signals.push_back(sig(index++, Phase::PhaseII_InControl, i < mis_signals));
    mask.push_back(true);
  }
  for (std::size_t i = 0; i < cor_total; ++i) {
    signals.push_back(sig(index++, Phase::PhaseII_InControl, i < cor_signals));
    mask.push_back(false);
  }
  const auto [sr_m, sr_c] = conditional_sr(signals, mask);
  CHECK(std::round(*sr_m * 100.0) / 100.0 == doctest::Approx(0.96));
  CHECK(std::round(*sr_c * 100.0) / 100.0 == doctest::Approx(0.42));

  // recomputing from the same records is idempotent
  const auto again = conditional_sr(signals, mask);
  CHECK(again.first.value() == sr_m.value());
  CHECK(again.second.value() == sr_c.value());
}

TEST_CASE("build_report assembles every cell") {
  std::vector<SignalRecord> signals = phase1_fixture(40, 2);
  for (std::size_t i = 0; i < 20; ++i)
    signals.push_back(sig(100 + i, Phase::PhaseII_InControl, i < 4, i % 2 == 0 ? 1 : 2));
  for (std::size_t i = 0; i < 10; ++i)
    signals.push_back(sig(200 + i, Phase::PhaseII_OutOfControl, i < 9));

  std::vector<bool> mask(20, false);
  mask[0] = mask[2] = true;  // two misclassified, both signaling (i < 4, even)

  const auto report = build_report(signals, &mask);
  CHECK(report.far().value() == doctest::Approx(0.05));
  CHECK(report.sr_weighted().value() == doctest::Approx(0.2));
  CHECK(report.cdr().value() == doctest::Approx(0.9));
  CHECK(report.sr_given_misclassified().value() == doctest::Approx(1.0));
  CHECK(report.sr_given_correct().value() == doctest::Approx(2.0 / 18.0));
  CHECK(report.sr_per_class.at(1).count == 10);
  CHECK(report.sr_per_class.at(2).count == 10);

  // zero-record cells report no value
  const MonitoringReport empty = build_report({});
  CHECK(!empty.far().has_value());
  CHECK(!empty.sr_weighted().has_value());
  CHECK(!empty.cdr().has_value());
}
