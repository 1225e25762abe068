#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "depthwatch/csvio.hpp"
#include "depthwatch/errors.hpp"
#include "depthwatch/svg.hpp"

using namespace depthwatch;

namespace {

const char* kHeader = "index,phase,true_label,predicted_label,softmax_0,softmax_1,e_0,e_1\n";

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0, pos = 0;
  while ((pos = text.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("header-only input parses to an empty stream") {
  std::istringstream in(kHeader);
  const auto parsed = parse_embeddings_csv(in);
  CHECK(parsed.records.empty());
  CHECK(parsed.softmax_dim == 2);
  CHECK(parsed.embedding_dim == 2);
}

TEST_CASE("a hand-written file round-trips exactly") {
  std::istringstream in(std::string(kHeader) +
                        "0,phase1,1,1,0.9,0.1,1.5,-2.25\n"
                        "1,phase2_ic,2,1,0.25,0.75,0,3\n"
                        "2,phase2_ooc,,2,,,0.125,7\n");
  const auto parsed = parse_embeddings_csv(in);
  REQUIRE(parsed.records.size() == 3);

  const auto& a = parsed.records[0];
  CHECK(a.index == 0);
  CHECK(a.phase == Phase::PhaseI);
  CHECK(a.true_label.value() == 1);
  CHECK(a.predicted_label == 1);
  CHECK((*a.softmax)(0) == doctest::Approx(0.9));
  CHECK(a.embedding(0) == 1.5);
  CHECK(a.embedding(1) == -2.25);

  const auto& c = parsed.records[2];
  CHECK(!c.true_label.has_value());
  CHECK(!c.softmax.has_value());
  CHECK(c.phase == Phase::PhaseII_OutOfControl);

  // write -> parse -> identical fields
  std::ostringstream out;
  write_embeddings_csv(out, parsed.records, 2, 2);
  std::istringstream in2(out.str());
  const auto again = parse_embeddings_csv(in2);
  REQUIRE(again.records.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again.records[i].index == parsed.records[i].index);
    CHECK(again.records[i].phase == parsed.records[i].phase);
    CHECK(again.records[i].embedding == parsed.records[i].embedding);
    CHECK(again.records[i].true_label == parsed.records[i].true_label);
  }
  // and the text itself is stable
  std::ostringstream out2;
  write_embeddings_csv(out2, again.records, 2, 2);
  CHECK(out.str() == out2.str());
}

TEST_CASE("parse errors carry the line number") {
  // phase1 without a true label
  std::istringstream missing(std::string(kHeader) + "0,phase1,,1,0.9,0.1,1,2\n");
  CHECK_THROWS_WITH_AS((void)parse_embeddings_csv(missing), doctest::Contains(":2"), DataError);

  // ragged row
  std::istringstream ragged(std::string(kHeader) +
                            "0,phase1,1,1,0.9,0.1,1,2\n"
                            "1,phase1,1,1,0.9,0.1,1\n");
  CHECK_THROWS_WITH_AS((void)parse_embeddings_csv(ragged), doctest::Contains(":3"), DataError);

  // non-numeric embedding cell
  std::istringstream bad_cell(std::string(kHeader) + "0,phase1,1,1,0.9,0.1,abc,2\n");
  CHECK_THROWS_WITH_AS((void)parse_embeddings_csv(bad_cell), doctest::Contains("e_0"), DataError);

  // unknown phase token
  std::istringstream bad_phase(std::string(kHeader) + "0,warmup,1,1,0.9,0.1,1,2\n");
  CHECK_THROWS_WITH_AS((void)parse_embeddings_csv(bad_phase), doctest::Contains("warmup"),
                       DataError);

  // softmax must sum to one
  std::istringstream bad_sum(std::string(kHeader) + "0,phase1,1,1,0.9,0.4,1,2\n");
  CHECK_THROWS_WITH_AS((void)parse_embeddings_csv(bad_sum), doctest::Contains("sum"), DataError);

  // partial softmax block
  std::istringstream partial(std::string(kHeader) + "0,phase1,1,1,0.9,,1,2\n");
  CHECK_THROWS_AS((void)parse_embeddings_csv(partial), DataError);

  // malformed header
  std::istringstream bad_header("index,phase,true_label,predicted_label,softmax_0\n");
  CHECK_THROWS_AS((void)parse_embeddings_csv(bad_header), DataError);
}

TEST_CASE("signals CSV round-trips through read_signals_csv_file") {
  std::vector<SignalRecord> signals = {
      {0, 1, 0.25, false, Phase::PhaseI},
      {1, kMergedClass, 0.04, true, Phase::PhaseII_InControl},
      {2, 2, 1.0, false, Phase::PhaseII_OutOfControl},
  };
  const std::string path = "/tmp/depthwatch_test_signals.csv";
  write_signals_csv_file(path, signals);
  const auto again = read_signals_csv_file(path);
  REQUIRE(again.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(again[i].index == signals[i].index);
    CHECK(again[i].class_used == signals[i].class_used);
    CHECK(again[i].statistic == signals[i].statistic);
    CHECK(again[i].signal == signals[i].signal);
    CHECK(again[i].phase == signals[i].phase);
  }
}

TEST_CASE("format_double is shortest-round-trip") {
  CHECK(format_double(0.05) == "0.05");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
}

TEST_CASE("svg chart carries the structural elements") {
  std::vector<SignalRecord> signals;
  for (std::size_t i = 0; i < 30; ++i) {
    signals.push_back({i, 1, 0.1 + 0.025 * static_cast<double>(i % 20), (i % 20) < 2,
                       i < 10 ? Phase::PhaseI
                              : (i < 20 ? Phase::PhaseII_InControl
                                        : Phase::PhaseII_OutOfControl)});
  }
  const auto config = make_chart_config(ChartKind::R, 0.12, 1);
  std::map<std::size_t, bool> misclassified{{12, true}, {15, true}};
  const auto svg = render_control_chart(signals, config, misclassified, "test chart");

  CHECK(svg.find("<svg") == 0);
  CHECK(count_occurrences(svg, "<circle") == 30 + 4);  // points + legend markers
  CHECK(count_occurrences(svg, "class=\"lcl\"") == 1);
  CHECK(count_occurrences(svg, "class=\"misclassified\"") == 2);
  CHECK(svg.find("LCL = 0.12") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);

  // structural determinism: identical inputs, identical text
  CHECK(render_control_chart(signals, config, misclassified, "test chart") == svg);
}
