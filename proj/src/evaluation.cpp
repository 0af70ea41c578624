#include "lexalign/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

namespace lexalign {

Direction parse_direction(const std::string& text) {
  if (text == "forward") return Direction::Forward;
  if (text == "inverse") return Direction::Inverse;
  throw std::invalid_argument("unknown direction '" + text + "' (expected forward or inverse)");
}

std::string direction_name(Direction d) { return d == Direction::Forward ? "forward" : "inverse"; }

EvalReport precision_at_k(const Matrix& map, Direction direction, const EmbeddingSpace& source,
                          const EmbeddingSpace& target, const TranslationDictionary& dict,
                          const SimilarityMetric& metric, std::span<const std::size_t> ks,
                          std::size_t search_depth) {
  if (dict.empty()) throw EvaluationError("evaluation dictionary is empty");
  if (ks.empty()) throw std::invalid_argument("at least one k is required");
  if (std::ranges::any_of(ks, [](std::size_t k) { return k == 0; }))
    throw std::invalid_argument("k must be >= 1");
  const bool forward = direction == Direction::Forward;
  const EmbeddingSpace& queries = forward ? source : target;
  const EmbeddingSpace& candidates = forward ? target : source;
  if (!map.square() || map.cols() != queries.dim() || queries.dim() != candidates.dim())
    throw DimensionError("evaluation: map and embedding dimensions disagree");
  const TranslationDictionary pairs = forward ? dict : dict.inverted();

  std::vector<std::size_t> rows;
  std::vector<std::set<std::size_t>> accepted;
  std::vector<const TranslationDictionary::Entries::value_type*> words;
  for (const auto& entry : pairs.entries()) {
    const auto q = queries.index_of(entry.first);
    if (!q) continue;
    std::set<std::size_t> ok;
    for (const auto& t : entry.second)
      if (const auto c = candidates.index_of(t)) ok.insert(*c);
    if (ok.empty()) continue;
    rows.push_back(*q);
    accepted.push_back(std::move(ok));
    words.push_back(&entry);
  }

  EvalReport report;
  report.metric = metric.name();
  report.direction = direction;
  report.dictionary_words = pairs.size();
  report.covered = rows.size();
  report.coverage = static_cast<double>(rows.size()) / static_cast<double>(pairs.size());
  report.search_depth = search_depth;
  if (rows.empty()) throw EvaluationError("no dictionary word is covered by the loaded vocabularies");

  const std::size_t n = candidates.size();
  const std::size_t depth = std::min(n, std::max(search_depth, *std::ranges::max_element(ks)));
  const Matrix mapped = apply_map(map, queries.vectors());
  NeighborLists lists;
  if (metric.is_csls()) {
    const NeighborhoodCache cache = build_neighborhood_cache(mapped, candidates.vectors(), metric.csls_t);
    lists = csls_topk(mapped.gather_rows(rows), candidates.vectors(), cache.select_queries(rows), depth);
  } else {
    lists = knn_inner_product(mapped.gather_rows(rows), candidates.vectors(), depth);
  }

  std::vector<std::size_t> first_hit(rows.size(), 0);  // 0 = not within depth
  for (std::size_t w = 0; w < rows.size(); ++w)
    for (std::size_t r = 0; r < lists[w].size(); ++r)
      if (accepted[w].contains(lists[w][r].index)) {
        first_hit[w] = r + 1;
        break;
      }
  for (std::size_t k : ks) {
    const std::size_t hits = std::ranges::count_if(first_hit, [k](std::size_t r) { return r != 0 && r <= k; });
    report.p_at[k] = 100.0 * static_cast<double>(hits) / static_cast<double>(rows.size());
  }
  for (std::size_t w = 0; w < rows.size(); ++w) {
    if (first_hit[w] == 1) continue;
    ErrorRecord e;
    e.query = words[w]->first;
    e.predicted = candidates.token(lists[w].front().index);
    e.acceptable.assign(words[w]->second.begin(), words[w]->second.end());
    if (first_hit[w] != 0 && first_hit[w] <= search_depth) e.rank = first_hit[w];
    report.errors.push_back(std::move(e));
  }
  return report;
}

std::vector<ErrorRecord> error_analysis(const EvalReport& report, std::size_t limit) {
  const std::size_t n = std::min(limit, report.errors.size());
  return {report.errors.begin(), report.errors.begin() + static_cast<std::ptrdiff_t>(n)};
}

namespace {

std::string rank_text(const ErrorRecord& e, std::size_t depth) {
  return e.rank ? std::to_string(*e.rank) : ">" + std::to_string(depth);
}

std::string joined(const std::vector<std::string>& v, char sep) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

void write_report_table(const EvalReport& report, std::ostream& out, std::size_t error_limit) {
  char buf[128];
  out << "direction " << direction_name(report.direction) << ", metric " << report.metric << '\n';
  std::snprintf(buf, sizeof buf, "coverage  %zu / %zu (%.2f%%)\n", report.covered, report.dictionary_words,
                100.0 * report.coverage);
  out << buf;
  for (const auto& [k, p] : report.p_at) {
    std::snprintf(buf, sizeof buf, "P@%-4zu %7.2f\n", k, p);
    out << buf;
  }
  const auto shown = error_analysis(report, error_limit);
  if (shown.empty()) return;
  out << "errors (" << report.errors.size() << " total, first " << shown.size() << "):\n";
  for (const auto& e : shown)
    out << "  " << e.query << " -> " << e.predicted << "   truth " << joined(e.acceptable, ',') << " at rank "
        << rank_text(e, report.search_depth) << '\n';
}

void save_report_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "k,precision,covered,dictionary_words,coverage\n";
  char buf[160];
  for (const auto& [k, p] : report.p_at) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%zu,%zu,%.17g\n", k, p, report.covered, report.dictionary_words,
                  report.coverage);
    out << buf;
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void save_errors_csv(const EvalReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "query,predicted,acceptable,rank\n";
  for (const auto& e : report.errors)
    out << e.query << ',' << e.predicted << ',' << joined(e.acceptable, '|') << ','
        << rank_text(e, report.search_depth) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void export_vectors(std::span<const ExportPart> parts, const std::filesystem::path& path) {
  if (parts.empty()) throw std::invalid_argument("nothing to export");
  const std::size_t d = parts.front().space->dim();
  for (const auto& p : parts) {
    if (!p.space || !p.map) throw std::invalid_argument("export part needs a space and a map");
    if (p.space->dim() != d || p.map->rows() != d || p.map->cols() != d)
      throw DimensionError("export: spaces and maps must share one dimension");
    for (std::size_t r : p.rows)
      if (r >= p.space->size()) throw std::out_of_range("export row " + std::to_string(r) + " out of range");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "token,lang";
  for (std::size_t j = 0; j < d; ++j) out << ",x" << j;
  for (std::size_t j = 0; j < d; ++j) out << ",m" << j;
  out << '\n';
  char buf[32];
  for (const auto& p : parts) {
    const Matrix original = p.space->vectors().gather_rows(p.rows);
    const Matrix mapped = apply_map(*p.map, original);
    for (std::size_t i = 0; i < p.rows.size(); ++i) {
      out << p.space->token(p.rows[i]) << ',' << p.space->lang();
      for (const Matrix* m : {&original, &mapped})
        for (double v : m->row(i)) {
          std::snprintf(buf, sizeof buf, "%.17g", v);
          out << ',' << buf;
        }
      out << '\n';
    }
  }
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace lexalign
