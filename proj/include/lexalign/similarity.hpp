#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexalign/embeddings.hpp"
#include "lexalign/matrix.hpp"

namespace lexalign {

struct SimilarityMetric {
  enum class Kind { InnerProduct, Csls };

  Kind kind = Kind::Csls;
  // Neighborhood size for CSLS; ignored for inner product.
  std::size_t csls_t = 10;

  static SimilarityMetric inner_product() { return {Kind::InnerProduct, 0}; }
  static SimilarityMetric csls(std::size_t t = 10) { return {Kind::Csls, t}; }

  bool is_csls() const { return kind == Kind::Csls; }
  std::string name() const;
};

// Parses "ip" / "csls".
SimilarityMetric::Kind parse_metric_kind(const std::string& text);

struct Neighbor {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

// One list per query, best first. Ties go to the lower candidate index.
using NeighborLists = std::vector<std::vector<Neighbor>>;

// Exact top-k by inner product. Throws std::invalid_argument if k > n.
NeighborLists knn_inner_product(const Matrix& queries, const Matrix& candidates, std::size_t k);

// Mean of the t largest inner products of each query against all targets
// (r_query) and of each target against all queries (r_target).
struct NeighborhoodCache {
  std::size_t t = 0;
  std::vector<double> r_query;
  std::vector<double> r_target;

  NeighborhoodCache select_queries(std::span<const std::size_t> rows) const;
};

NeighborhoodCache build_neighborhood_cache(const Matrix& mapped_queries, const Matrix& targets,
                                           std::size_t t);

// CSLS(q_i, y_j) = 2 <q_i, y_j> - r_query(i) - r_target(j).
NeighborLists csls_topk(const Matrix& mapped_queries, const Matrix& targets, std::size_t t,
                        std::size_t k);
// Same ranking with a precomputed cache whose r_query rows align with
// mapped_queries and r_target with targets.
NeighborLists csls_topk(const Matrix& mapped_queries, const Matrix& targets,
                        const NeighborhoodCache& cache, std::size_t k);

// Dispatches on the metric; the CSLS cache is built from the given queries.
NeighborLists topk(const Matrix& mapped_queries, const Matrix& targets, const SimilarityMetric& metric,
                   std::size_t k);

struct InducedPair {
  std::size_t source = 0;
  std::size_t target = 0;

  friend bool operator==(const InducedPair&, const InducedPair&) = default;
};

// Finite stand-in for the unknown word permutation: source-sorted pairs,
// each target at most once.
using InducedDictionary = std::vector<InducedPair>;

class EmptyDictionaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pairs (i, j) where j is the top-1 target for the mapped source word i and
// i is the top-1 mapped source word for j. Queries are the first
// query_limit source rows; candidates the first target_limit target rows.
// With CSLS, r_target is taken against the restricted query set.
// Throws EmptyDictionaryError when no pair is mutual.
InducedDictionary mutual_nn_pairs(const Matrix& map, const Matrix& source_vectors,
                                  const Matrix& target_vectors, const SimilarityMetric& metric,
                                  std::size_t query_limit, std::size_t target_limit = kUnlimited);

// Number of targets that are the top-1 candidate of more than h queries.
std::size_t hub_count(const Matrix& mapped_queries, const Matrix& targets, std::size_t h,
                      const SimilarityMetric& metric = SimilarityMetric::inner_product());

}  // namespace lexalign
