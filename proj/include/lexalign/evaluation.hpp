#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexalign/dictionary.hpp"
#include "lexalign/embeddings.hpp"
#include "lexalign/matrix.hpp"
#include "lexalign/similarity.hpp"

namespace lexalign {

// Forward: the map sends source vectors into the target space and the
// dictionary is read source -> target. Inverse: the map sends target vectors
// into the source space and the same dictionary is read target -> source.
enum class Direction { Forward, Inverse };

Direction parse_direction(const std::string& text);
std::string direction_name(Direction d);

struct ErrorRecord {
  std::string query;
  std::string predicted;
  std::vector<std::string> acceptable;  // sorted
  // 1-based rank of the best acceptable candidate; empty when deeper than
  // the search depth.
  std::optional<std::size_t> rank;
};

struct EvalReport {
  std::string metric;
  Direction direction = Direction::Forward;
  std::size_t dictionary_words = 0;
  std::size_t covered = 0;
  double coverage = 0.0;  // covered / dictionary_words
  std::map<std::size_t, double> p_at;  // k -> percentage of covered words
  std::vector<ErrorRecord> errors;     // covered words missed at rank 1, in dictionary order
  std::size_t search_depth = 100;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A dictionary word counts as covered when it is in the query vocabulary and
// at least one of its translations is in the candidate vocabulary. Retrieval
// for CSLS uses neighborhoods over the whole mapped query vocabulary.
EvalReport precision_at_k(const Matrix& map, Direction direction, const EmbeddingSpace& source,
                          const EmbeddingSpace& target, const TranslationDictionary& dict,
                          const SimilarityMetric& metric, std::span<const std::size_t> ks,
                          std::size_t search_depth = 100);

std::vector<ErrorRecord> error_analysis(const EvalReport& report, std::size_t limit);

void write_report_table(const EvalReport& report, std::ostream& out, std::size_t error_limit = 10);
// Columns: k,precision,covered,dictionary_words,coverage
void save_report_csv(const EvalReport& report, const std::filesystem::path& path);
// Columns: query,predicted,acceptable,rank; acceptable is '|'-joined and
// rank is ">depth" when not found.
void save_errors_csv(const EvalReport& report, const std::filesystem::path& path);

struct ExportPart {
  const EmbeddingSpace* space = nullptr;
  const Matrix* map = nullptr;  // applied to the original vectors
  std::vector<std::size_t> rows;
};

// Header token,lang,x0..x{d-1},m0..m{d-1}; one line per requested row.
void export_vectors(std::span<const ExportPart> parts, const std::filesystem::path& path);

}  // namespace lexalign
