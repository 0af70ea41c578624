#include "lexalign/procrustes.hpp"

#include <algorithm>
#include <fstream>

#include "lexalign/numerics.hpp"

namespace lexalign {

ProcrustesSolution solve_procrustes(const Matrix& source_rows, const Matrix& target_rows) {
  require_same_shape(source_rows, target_rows, "solve_procrustes");
  if (source_rows.rows() == 0 || source_rows.cols() == 0)
    throw DimensionError("solve_procrustes needs at least one pair");
  const SvdResult f = svd(matmul_at(target_rows, source_rows));
  const double top = f.singular.front();
  const bool degenerate = top == 0.0 || f.singular.back() <= 1e-12 * top;
  return {matmul_bt(f.u, f.v), degenerate};
}

RefineResult refine(const Matrix& w_init, const EmbeddingSpace& source, const EmbeddingSpace& target,
                    const RefineOptions& options) {
  if (!w_init.square() || w_init.cols() != source.dim() || source.dim() != target.dim())
    throw DimensionError("refine: mapping and embedding dimensions disagree");
  RefineResult result{w_init, {}, {}, false, {}};
  Matrix current = w_init;
  for (std::size_t it = 0; it < options.iterations; ++it) {
    InducedDictionary dict;
    try {
      dict = mutual_nn_pairs(current, source.vectors(), target.vectors(), options.metric,
                             options.query_limit, options.target_limit);
    } catch (const EmptyDictionaryError& e) {
      result.map = w_init;
      result.aborted = true;
      result.diagnostic = "refinement iteration " + std::to_string(it + 1) + ": " + e.what();
      return result;
    }
    std::vector<std::size_t> src_rows, tgt_rows;
    src_rows.reserve(dict.size());
    tgt_rows.reserve(dict.size());
    for (const auto& p : dict) {
      src_rows.push_back(p.source);
      tgt_rows.push_back(p.target);
    }
    const ProcrustesSolution sol =
        solve_procrustes(source.vectors().gather_rows(src_rows), target.vectors().gather_rows(tgt_rows));
    if (sol.degenerate && result.diagnostic.empty())
      result.diagnostic = "induced dictionary spans fewer than d dimensions; solution not unique";
    current = sol.map;
    result.dictionary_sizes.push_back(dict.size());
    result.dictionary = std::move(dict);
  }
  result.map = std::move(current);
  return result;
}

RefineResult refine_inverse(const Matrix& z_init, const EmbeddingSpace& source,
                            const EmbeddingSpace& target, const RefineOptions& options) {
  return refine(z_init, target, source, options);
}

RefineResult refine_inverse_from_dictionary(const InducedDictionary& forward,
                                            const EmbeddingSpace& source,
                                            const EmbeddingSpace& target) {
  if (forward.empty()) throw EmptyDictionaryError("cannot refine from an empty dictionary");
  std::vector<std::size_t> src_rows, tgt_rows;
  InducedDictionary transposed;
  for (const auto& p : forward) {
    src_rows.push_back(p.source);
    tgt_rows.push_back(p.target);
    transposed.push_back({p.target, p.source});
  }
  std::ranges::sort(transposed, {}, &InducedPair::source);
  const ProcrustesSolution sol =
      solve_procrustes(target.vectors().gather_rows(tgt_rows), source.vectors().gather_rows(src_rows));
  RefineResult result{sol.map, {forward.size()}, std::move(transposed), false, {}};
  if (sol.degenerate) result.diagnostic = "dictionary spans fewer than d dimensions; solution not unique";
  return result;
}

void save_induced_dictionary(const InducedDictionary& dict, const EmbeddingSpace& source,
                             const EmbeddingSpace& target, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& p : dict) out << source.token(p.source) << ' ' << target.token(p.target) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace lexalign
