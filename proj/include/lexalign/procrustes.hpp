#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lexalign/embeddings.hpp"
#include "lexalign/matrix.hpp"
#include "lexalign/similarity.hpp"

namespace lexalign {

struct ProcrustesSolution {
  Matrix map;  // orthogonal d x d, applied to rows as x -> map * x
  // M had a (numerically) zero singular value, so the minimizer is not unique.
  bool degenerate = false;
};

// Orthogonal W minimizing sum_i ||W s_i - t_i||^2 over the paired rows:
// M = T^T S = U diag(sigma) V^T, W = U V^T.
ProcrustesSolution solve_procrustes(const Matrix& source_rows, const Matrix& target_rows);

struct RefineOptions {
  SimilarityMetric metric = SimilarityMetric::csls(10);
  std::size_t query_limit = 10000;
  std::size_t iterations = 1;
  // Candidate pool on the target side; unrestricted by default.
  std::size_t target_limit = kUnlimited;
};

struct RefineResult {
  Matrix map;
  std::vector<std::size_t> dictionary_sizes;  // one per completed iteration
  InducedDictionary dictionary;               // the last one induced
  bool aborted = false;
  std::string diagnostic;
};

// Each iteration induces a mutual-NN dictionary with the current map and
// re-solves Procrustes on it. On an empty dictionary the initial map is
// returned with aborted = true.
RefineResult refine(const Matrix& w_init, const EmbeddingSpace& source, const EmbeddingSpace& target,
                    const RefineOptions& options = {});

// Target -> source counterpart: Z maps raw target vectors, queries are the
// most frequent target words, candidates the source vocabulary.
RefineResult refine_inverse(const Matrix& z_init, const EmbeddingSpace& source,
                            const EmbeddingSpace& target, const RefineOptions& options = {});

// Alternative inverse refinement: one Procrustes solve on a forward
// dictionary with its pairs transposed.
RefineResult refine_inverse_from_dictionary(const InducedDictionary& forward,
                                            const EmbeddingSpace& source,
                                            const EmbeddingSpace& target);

// Two columns: source token, target token.
void save_induced_dictionary(const InducedDictionary& dict, const EmbeddingSpace& source,
                             const EmbeddingSpace& target, const std::filesystem::path& path);

}  // namespace lexalign
