#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>

namespace lexalign {

class DictionaryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Source token -> set of acceptable target tokens. Iteration order is the
// sorted source-token order, so anything computed from it is independent of
// the line order of the file it came from.
class TranslationDictionary {
 public:
  using Entries = std::map<std::string, std::set<std::string>>;

  TranslationDictionary() = default;
  explicit TranslationDictionary(Entries entries);

  void add(const std::string& source, const std::string& target);

  const Entries& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t pair_count() const;

  // target -> {sources}
  TranslationDictionary inverted() const;

 private:
  Entries entries_;
};

struct DictionaryLoadStats {
  std::size_t pairs = 0;
  std::size_t skipped_lines = 0;
};

// One "source target" pair per line, whitespace separated. Blank or
// malformed lines are skipped and counted; an empty result is an error.
TranslationDictionary load_dictionary(const std::filesystem::path& path,
                                      DictionaryLoadStats* stats = nullptr);

void save_dictionary(const TranslationDictionary& dict, const std::filesystem::path& path);

}  // namespace lexalign
