#include "depthwatch/csvio.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "depthwatch/errors.hpp"

namespace depthwatch {

std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell += ch;
    }
  }
  cells.push_back(cell);
  return cells;
}

double parse_number(const std::string& cell, const std::string& source, std::size_t line_no,
                    const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end || !std::isfinite(value)) {
    throw DataError(source + ":" + std::to_string(line_no) + ": column '" + column +
                    "' is not a finite number: '" + cell + "'");
  }
  return value;
}

long parse_integer(const std::string& cell, const std::string& source, std::size_t line_no,
                   const std::string& column) {
  long value = 0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    throw DataError(source + ":" + std::to_string(line_no) + ": column '" + column +
                    "' is not an integer: '" + cell + "'");
  }
  return value;
}

}  // namespace

ParsedStream parse_embeddings_csv(std::istream& in, const std::string& source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError(source_name + ": empty input, expected a header row");
  }
  const auto header = split_csv_line(line);
  if (header.size() < 5 || header[0] != "index" || header[1] != "phase" ||
      header[2] != "true_label" || header[3] != "predicted_label") {
    throw DataError(source_name + ":1: header must start with "
                    "index,phase,true_label,predicted_label");
  }
  std::size_t col = 4;
  int v = 0;
  while (col < header.size() && header[col] == "softmax_" + std::to_string(v)) {
    ++v;
    ++col;
  }
  int k = 0;
  while (col < header.size() && header[col] == "e_" + std::to_string(k)) {
    ++k;
    ++col;
  }
  if (col != header.size() || k == 0) {
    throw DataError(source_name + ":1: header must end with softmax_0..softmax_{v-1},"
                    "e_0..e_{k-1} (k >= 1); got '" +
                    (col < header.size() ? header[col] : header.back()) + "'");
  }
  const std::size_t expected_cells = 4 + static_cast<std::size_t>(v) + static_cast<std::size_t>(k);

  ParsedStream out;
  out.softmax_dim = v;
  out.embedding_dim = k;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != expected_cells) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(expected_cells) + " cells, got " +
                      std::to_string(cells.size()));
    }
    EmbeddingRecord rec;
    rec.index = static_cast<std::size_t>(parse_integer(cells[0], source_name, line_no, "index"));
    const auto phase = phase_from_token(cells[1]);
    if (!phase) {
      throw DataError(source_name + ":" + std::to_string(line_no) + ": unknown phase token '" +
                      cells[1] + "'");
    }
    rec.phase = *phase;
    if (!cells[2].empty()) {
      rec.true_label = static_cast<int>(parse_integer(cells[2], source_name, line_no, "true_label"));
    } else if (rec.phase == Phase::PhaseI) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": phase1 rows require a true_label");
    }
    rec.predicted_label =
        static_cast<int>(parse_integer(cells[3], source_name, line_no, "predicted_label"));

    bool any_softmax = false, all_softmax = true;
    for (int j = 0; j < v; ++j) {
      if (cells[4 + static_cast<std::size_t>(j)].empty()) {
        all_softmax = false;
      } else {
        any_softmax = true;
      }
    }
    if (any_softmax && !all_softmax) {
      throw DataError(source_name + ":" + std::to_string(line_no) +
                      ": softmax cells must be all present or all empty");
    }
    if (any_softmax) {
      Eigen::VectorXd sm(v);
      for (int j = 0; j < v; ++j) {
        sm(j) = parse_number(cells[4 + static_cast<std::size_t>(j)], source_name, line_no,
                             "softmax_" + std::to_string(j));
      }
      if (std::abs(sm.sum() - 1.0) > 1e-6) {
        throw DataError(source_name + ":" + std::to_string(line_no) +
                        ": softmax entries must sum to 1 (got " + format_double(sm.sum()) + ")");
      }
      rec.softmax = std::move(sm);
    }
    rec.embedding.resize(k);
    for (int j = 0; j < k; ++j) {
      rec.embedding(j) = parse_number(cells[4 + static_cast<std::size_t>(v + j)], source_name,
                                      line_no, "e_" + std::to_string(j));
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

ParsedStream parse_embeddings_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file: " + path);
  return parse_embeddings_csv(in, path);
}

void write_embeddings_csv(std::ostream& out, const std::vector<EmbeddingRecord>& records,
                          int softmax_dim, int embedding_dim) {
  out << "index,phase,true_label,predicted_label";
  for (int j = 0; j < softmax_dim; ++j) out << ",softmax_" << j;
  for (int j = 0; j < embedding_dim; ++j) out << ",e_" << j;
  out << "\n";
  for (const auto& rec : records) {
    out << rec.index << ',' << to_token(rec.phase) << ',';
    if (rec.true_label) out << *rec.true_label;
    out << ',' << rec.predicted_label;
    for (int j = 0; j < softmax_dim; ++j) {
      out << ',';
      if (rec.softmax) out << format_double((*rec.softmax)(j));
    }
    for (int j = 0; j < embedding_dim; ++j) out << ',' << format_double(rec.embedding(j));
    out << "\n";
  }
}

void write_embeddings_csv_file(const std::string& path, const std::vector<EmbeddingRecord>& records,
                               int softmax_dim, int embedding_dim) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  write_embeddings_csv(out, records, softmax_dim, embedding_dim);
}

void write_signals_csv(std::ostream& out, const std::vector<SignalRecord>& signals) {
  out << "index,class_used,statistic,signal,phase\n";
  for (const auto& s : signals) {
    out << s.index << ',' << class_token(s.class_used) << ',' << format_double(s.statistic)
        << ',' << (s.signal ? 1 : 0) << ',' << to_token(s.phase) << "\n";
  }
}

void write_signals_csv_file(const std::string& path, const std::vector<SignalRecord>& signals) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open output file: " + path);
  write_signals_csv(out, signals);
}

std::vector<SignalRecord> read_signals_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open signals file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty signals file");
  if (split_csv_line(line) != std::vector<std::string>{"index", "class_used", "statistic",
                                                       "signal", "phase"}) {
    throw DataError(path + ":1: unexpected signals header");
  }
  std::vector<SignalRecord> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 5) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 5 cells");
    }
    SignalRecord rec;
    rec.index = static_cast<std::size_t>(parse_integer(cells[0], path, line_no, "index"));
    rec.class_used = cells[1] == "merged"
                         ? kMergedClass
                         : static_cast<int>(parse_integer(cells[1], path, line_no, "class_used"));
    rec.statistic = parse_number(cells[2], path, line_no, "statistic");
    rec.signal = parse_integer(cells[3], path, line_no, "signal") != 0;
    const auto phase = phase_from_token(cells[4]);
    if (!phase) {
      throw DataError(path + ":" + std::to_string(line_no) + ": unknown phase token");
    }
    rec.phase = *phase;
    out.push_back(rec);
  }
  return out;
}

}  // namespace depthwatch
