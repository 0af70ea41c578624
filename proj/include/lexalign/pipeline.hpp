#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexalign/adversarial.hpp"
#include "lexalign/dictionary.hpp"
#include "lexalign/embeddings.hpp"
#include "lexalign/evaluation.hpp"
#include "lexalign/procrustes.hpp"

namespace lexalign {

// A referenced file is missing or unreadable, or inputs are specified
// inconsistently.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PipelineConfig {
  TrainerConfig trainer;

  // Inputs: either both embedding files or an in-memory synthetic pair.
  std::filesystem::path source_path;
  std::filesystem::path target_path;
  bool synthetic = false;
  SyntheticOptions synth;
  std::size_t max_vocab = kUnlimited;
  bool normalize = true;
  std::filesystem::path dict_path;
  std::filesystem::path checkpoint_path;  // maps read by refine/translate/evaluate/export

  SimilarityMetric metric = SimilarityMetric::csls(10);
  std::size_t query_limit = 10000;
  std::size_t iterations = 1;
  bool inverse_from_dictionary = false;
  std::size_t target_limit = kUnlimited;

  Direction direction = Direction::Forward;
  std::vector<std::size_t> ks{1, 5, 10};
  std::size_t search_depth = 100;
  std::size_t translate_k = 5;
  std::filesystem::path words_path;  // translate reads stdin when empty
  std::size_t export_count = 100;
  std::size_t error_limit = 10;

  std::filesystem::path out_dir = ".";
  bool quiet = false;
};

struct Inputs {
  EmbeddingSpace source;
  EmbeddingSpace target;
  std::optional<TranslationDictionary> dictionary;  // ground truth for synthetic input
};

// Output file names inside out_dir.
namespace files {
inline constexpr const char* kSource = "source.vec";
inline constexpr const char* kTarget = "target.vec";
inline constexpr const char* kDictionary = "dictionary.txt";
inline constexpr const char* kRotation = "ground_truth.map";
inline constexpr const char* kMaps = "maps.txt";
inline constexpr const char* kHistory = "history.csv";
inline constexpr const char* kRefined = "refined.txt";
inline constexpr const char* kInducedForward = "induced_forward.txt";
inline constexpr const char* kInducedInverse = "induced_inverse.txt";
inline constexpr const char* kVectors = "vectors.csv";
}  // namespace files

Inputs load_inputs(const PipelineConfig& config);

// Writes the synthetic pair: both embedding files, the true dictionary and
// the rotation as a checkpoint (W = Q, Z = Q^T).
SyntheticPair run_synth(const PipelineConfig& config, std::ostream& log);

TrainResult run_train(const PipelineConfig& config, std::ostream& log);

struct RefineOutput {
  RefineResult forward;
  RefineResult inverse;
};

RefineOutput run_refine(const PipelineConfig& config, std::ostream& log);

// One line per query word: the word followed by k "candidate:score" fields.
// Unknown words print "<word> <unknown>".
void run_translate(const PipelineConfig& config, std::istream& words, std::ostream& out);

EvalReport run_evaluate(const PipelineConfig& config, std::ostream& out);

void run_export(const PipelineConfig& config, std::ostream& log);

}  // namespace lexalign
