#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "lexalign/dictionary.hpp"
#include "lexalign/matrix.hpp"

namespace lexalign {

class EmbeddingFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Vocabulary in descending frequency order plus one vector per row.
// Immutable after construction.
class EmbeddingSpace {
 public:
  // Validates: unique nonempty tokens, one row per token, d >= 1, n >= 1,
  // finite entries, and unit rows (within 1e-9) when `normalized` is set.
  EmbeddingSpace(std::string lang, std::vector<std::string> vocab, Matrix vectors,
                 bool normalized = false);

  const std::string& lang() const { return lang_; }
  const std::vector<std::string>& vocab() const { return vocab_; }
  const Matrix& vectors() const { return vectors_; }
  bool normalized() const { return normalized_; }

  std::size_t size() const { return vocab_.size(); }
  std::size_t dim() const { return vectors_.cols(); }
  const std::string& token(std::size_t i) const { return vocab_.at(i); }
  std::optional<std::size_t> index_of(const std::string& token) const;

 private:
  std::string lang_;
  std::vector<std::string> vocab_;
  Matrix vectors_;
  bool normalized_ = false;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::size_t kUnlimited = std::numeric_limits<std::size_t>::max();

struct LoadOptions {
  std::size_t max_vocab = kUnlimited;
  bool normalize = false;
  std::string lang = "xx";
};

struct LoadStats {
  std::size_t duplicates_skipped = 0;
  std::size_t header_count = 0;
};

// word2vec text layout: "count dim" header, then "token v1 ... vdim" lines.
// Rows are kept in file order, which is taken as frequency order.
EmbeddingSpace load_text_embeddings(const std::filesystem::path& path, const LoadOptions& options,
                                    LoadStats* stats = nullptr);

// Writes the same layout with 17 significant digits, so a reload is exact.
void save_text_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path);

// Indices of the k most frequent words: 0 .. min(k, n).
inline std::ranges::iota_view<std::size_t, std::size_t> frequency_slice(const EmbeddingSpace& space,
                                                                         std::size_t k) {
  return std::views::iota(std::size_t{0}, std::min(k, space.size()));
}

EmbeddingSpace normalize_rows(const EmbeddingSpace& space);
Matrix normalized_rows(Matrix m);

enum class SourceShape {
  // i.i.d. standard Gaussian rows. Rotation invariant, so no distribution
  // matching method can recover the rotation from it.
  Isotropic,
  // Gaussian mixture with uneven weights. Breaks rotation invariance.
  Clustered,
};

struct SyntheticOptions {
  std::uint64_t seed = 0;
  std::size_t n = 2000;
  std::size_t d = 16;
  double noise_sigma = 0.01;
  bool shuffle_target = true;
  bool normalize = true;
  SourceShape shape = SourceShape::Clustered;
  std::size_t clusters = 24;
  double cluster_spread = 0.5;
};

struct SyntheticPair {
  EmbeddingSpace source;
  EmbeddingSpace target;
  // Orthogonal Q with target_row(pi(i)) = Q * source_row(i) + noise.
  Matrix ground_truth_rotation;
  TranslationDictionary ground_truth_dictionary;
  // target_position[i] = target row holding the translation of source row i.
  std::vector<std::size_t> target_position;
  double noise_sigma = 0.0;
};

// Throws std::invalid_argument when n < d or noise_sigma < 0.
SyntheticPair generate_synthetic_pair(const SyntheticOptions& options);

std::string synthetic_token(char prefix, std::size_t index, std::size_t n);

}  // namespace lexalign
