#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "depthwatch/charting.hpp"
#include "depthwatch/types.hpp"

namespace depthwatch {

// Embedding stream parsed from the frozen CSV schema:
//   index,phase,true_label,predicted_label,softmax_0..softmax_{v-1},e_0..e_{k-1}
// true_label and the softmax cells may be empty per row (all-or-none for the
// softmax block); phase1 rows must carry a true label.
struct ParsedStream {
  std::vector<EmbeddingRecord> records;
  int softmax_dim = 0;  // v
  int embedding_dim = 0;  // k
};

ParsedStream parse_embeddings_csv(std::istream& in, const std::string& source_name = "stream");
ParsedStream parse_embeddings_csv_file(const std::string& path);

void write_embeddings_csv(std::ostream& out, const std::vector<EmbeddingRecord>& records,
                          int softmax_dim, int embedding_dim);
void write_embeddings_csv_file(const std::string& path, const std::vector<EmbeddingRecord>& records,
                               int softmax_dim, int embedding_dim);

// Signals CSV: index,class_used,statistic,signal,phase
void write_signals_csv(std::ostream& out, const std::vector<SignalRecord>& signals);
void write_signals_csv_file(const std::string& path, const std::vector<SignalRecord>& signals);
std::vector<SignalRecord> read_signals_csv_file(const std::string& path);

// Shortest round-trip decimal rendering of a double.
std::string format_double(double value);

}  // namespace depthwatch
