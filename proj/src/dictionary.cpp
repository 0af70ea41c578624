#include "lexalign/dictionary.hpp"

#include <fstream>
#include <sstream>

namespace lexalign {

TranslationDictionary::TranslationDictionary(Entries entries) : entries_(std::move(entries)) {
  for (const auto& [source, targets] : entries_)
    if (source.empty() || targets.empty()) throw DictionaryError("dictionary entry without tokens");
}

void TranslationDictionary::add(const std::string& source, const std::string& target) {
  if (source.empty() || target.empty()) throw DictionaryError("empty dictionary token");
  entries_[source].insert(target);
}

std::size_t TranslationDictionary::pair_count() const {
  std::size_t n = 0;
  for (const auto& [_, targets] : entries_) n += targets.size();
  return n;
}

TranslationDictionary TranslationDictionary::inverted() const {
  TranslationDictionary out;
  for (const auto& [source, targets] : entries_)
    for (const auto& target : targets) out.add(target, source);
  return out;
}

TranslationDictionary load_dictionary(const std::filesystem::path& path, DictionaryLoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw DictionaryError("cannot open dictionary " + path.string());
  TranslationDictionary dict;
  DictionaryLoadStats local;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string source, target, extra;
    if (!(fields >> source >> target) || (fields >> extra)) {
      ++local.skipped_lines;
      continue;
    }
    dict.add(source, target);
    ++local.pairs;
  }
  if (dict.empty()) throw DictionaryError("dictionary " + path.string() + " has no entries");
  if (stats) *stats = local;
  return dict;
}

void save_dictionary(const TranslationDictionary& dict, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DictionaryError("cannot write dictionary " + path.string());
  for (const auto& [source, targets] : dict.entries())
    for (const auto& target : targets) out << source << ' ' << target << '\n';
  if (!out) throw DictionaryError("write failed for " + path.string());
}

}  // namespace lexalign
