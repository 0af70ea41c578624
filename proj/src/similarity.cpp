#include "lexalign/similarity.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include "lexalign/parallel.hpp"

namespace lexalign {

std::string SimilarityMetric::name() const {
  return is_csls() ? "csls(t=" + std::to_string(csls_t) + ")" : "ip";
}

SimilarityMetric::Kind parse_metric_kind(const std::string& text) {
  if (text == "ip") return SimilarityMetric::Kind::InnerProduct;
  if (text == "csls") return SimilarityMetric::Kind::Csls;
  throw std::invalid_argument("unknown metric '" + text + "' (expected ip or csls)");
}

namespace {

// score(i, j) = scale * <q_i, c_j> - query_bias[i] - cand_bias[j]; empty
// bias spans count as zero.
struct ScoreTerms {
  double scale = 1.0;
  std::span<const double> query_bias;
  std::span<const double> cand_bias;
};

void score_row(const Matrix& queries, std::size_t i, const Matrix& candidates, const ScoreTerms& terms,
               std::vector<double>& out) {
  const auto q = queries.row(i);
  const double qb = terms.query_bias.empty() ? 0.0 : terms.query_bias[i];
  out.resize(candidates.rows());
  for (std::size_t j = 0; j < candidates.rows(); ++j) {
    double s = terms.scale * dot(q, candidates.row(j)) - qb;
    if (!terms.cand_bias.empty()) s -= terms.cand_bias[j];
    out[j] = s;
  }
}

void check_widths(const Matrix& queries, const Matrix& candidates) {
  if (queries.cols() != candidates.cols())
    throw DimensionError("query width " + std::to_string(queries.cols()) + " != candidate width " +
                         std::to_string(candidates.cols()));
}

NeighborLists scored_topk(const Matrix& queries, const Matrix& candidates, std::size_t k,
                          const ScoreTerms& terms) {
  check_widths(queries, candidates);
  const std::size_t n = candidates.rows();
  if (k > n) throw std::invalid_argument("k = " + std::to_string(k) + " exceeds " + std::to_string(n) + " candidates");
  NeighborLists out(queries.rows());
  if (k == 0) return out;

  parallel_for(queries.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores;
    std::vector<std::size_t> order(n);
    for (std::size_t i = begin; i < end; ++i) {
      score_row(queries, i, candidates, terms, scores);
      auto& list = out[i];
      list.reserve(k);
      if (k == 1) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < n; ++j)
          if (scores[j] > scores[best]) best = j;
        list.push_back({best, scores[best]});
        continue;
      }
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                        [&](std::size_t a, std::size_t b) {
                          return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
                        });
      for (std::size_t r = 0; r < k; ++r) list.push_back({order[r], scores[order[r]]});
    }
  });
  return out;
}

// Mean of the t largest <a_i, b_j> over j, for every row i of a.
std::vector<double> mean_topk_similarity(const Matrix& a, const Matrix& b, std::size_t t) {
  std::vector<double> out(a.rows());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores;
    for (std::size_t i = begin; i < end; ++i) {
      score_row(a, i, b, {}, scores);
      std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(t), scores.end(),
                        std::greater<>());
      double sum = 0.0;
      for (std::size_t r = 0; r < t; ++r) sum += scores[r];
      out[i] = sum / static_cast<double>(t);
    }
  });
  return out;
}

}  // namespace

NeighborLists knn_inner_product(const Matrix& queries, const Matrix& candidates, std::size_t k) {
  return scored_topk(queries, candidates, k, {});
}

NeighborhoodCache NeighborhoodCache::select_queries(std::span<const std::size_t> rows) const {
  NeighborhoodCache out{t, {}, r_target};
  out.r_query.reserve(rows.size());
  for (std::size_t r : rows) out.r_query.push_back(r_query.at(r));
  return out;
}

NeighborhoodCache build_neighborhood_cache(const Matrix& mapped_queries, const Matrix& targets,
                                           std::size_t t) {
  check_widths(mapped_queries, targets);
  if (t == 0) throw std::invalid_argument("CSLS neighborhood size must be >= 1");
  if (t > targets.rows() || t > mapped_queries.rows())
    throw std::invalid_argument("CSLS neighborhood size " + std::to_string(t) +
                                " exceeds a set size (" + std::to_string(mapped_queries.rows()) +
                                " queries, " + std::to_string(targets.rows()) + " targets)");
  return {t, mean_topk_similarity(mapped_queries, targets, t),
          mean_topk_similarity(targets, mapped_queries, t)};
}

NeighborLists csls_topk(const Matrix& mapped_queries, const Matrix& targets, std::size_t t,
                        std::size_t k) {
  return csls_topk(mapped_queries, targets, build_neighborhood_cache(mapped_queries, targets, t), k);
}

NeighborLists csls_topk(const Matrix& mapped_queries, const Matrix& targets,
                        const NeighborhoodCache& cache, std::size_t k) {
  if (cache.r_query.size() != mapped_queries.rows() || cache.r_target.size() != targets.rows())
    throw DimensionError("neighborhood cache does not match the query/target sets");
  return scored_topk(mapped_queries, targets, k, {2.0, cache.r_query, cache.r_target});
}

NeighborLists topk(const Matrix& mapped_queries, const Matrix& targets, const SimilarityMetric& metric,
                   std::size_t k) {
  if (metric.is_csls()) return csls_topk(mapped_queries, targets, metric.csls_t, k);
  return knn_inner_product(mapped_queries, targets, k);
}

InducedDictionary mutual_nn_pairs(const Matrix& map, const Matrix& source_vectors,
                                  const Matrix& target_vectors, const SimilarityMetric& metric,
                                  std::size_t query_limit, std::size_t target_limit) {
  if (map.rows() != map.cols() || map.cols() != source_vectors.cols())
    throw DimensionError("mapping does not match the source dimension");
  check_widths(source_vectors, target_vectors);
  if (query_limit == 0) throw std::invalid_argument("query_limit must be >= 1");
  const std::size_t m = std::min(query_limit, source_vectors.rows());
  const std::size_t n = std::min(target_limit, target_vectors.rows());

  const Matrix queries = apply_map(map, source_vectors.row_block(0, m));
  const Matrix candidates = n == target_vectors.rows() ? target_vectors : target_vectors.row_block(0, n);

  ScoreTerms forward, backward;
  NeighborhoodCache cache;
  if (metric.is_csls()) {
    cache = build_neighborhood_cache(queries, candidates, metric.csls_t);
    forward = {2.0, cache.r_query, cache.r_target};
    backward = {2.0, cache.r_target, cache.r_query};
  }
  const NeighborLists fwd = scored_topk(queries, candidates, 1, forward);
  const NeighborLists bwd = scored_topk(candidates, queries, 1, backward);

  InducedDictionary pairs;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = fwd[i][0].index;
    if (bwd[j][0].index == i) pairs.push_back({i, j});
  }
  if (pairs.empty())
    throw EmptyDictionaryError("no mutual nearest neighbours among " + std::to_string(m) +
                               " queries under " + metric.name());
  return pairs;
}

std::size_t hub_count(const Matrix& mapped_queries, const Matrix& targets, std::size_t h,
                      const SimilarityMetric& metric) {
  const NeighborLists best = topk(mapped_queries, targets, metric, 1);
  std::vector<std::size_t> hits(targets.rows(), 0);
  for (const auto& list : best) ++hits[list[0].index];
  return static_cast<std::size_t>(std::ranges::count_if(hits, [h](std::size_t c) { return c > h; }));
}

}  // namespace lexalign
