#include "lexalign/embeddings.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "lexalign/numerics.hpp"
#include "lexalign/rng.hpp"

namespace lexalign {

EmbeddingSpace::EmbeddingSpace(std::string lang, std::vector<std::string> vocab, Matrix vectors,
                               bool normalized)
    : lang_(std::move(lang)), vocab_(std::move(vocab)), vectors_(std::move(vectors)),
      normalized_(normalized) {
  if (vocab_.empty() || vectors_.cols() == 0)
    throw std::invalid_argument("embedding space needs n >= 1 and d >= 1");
  if (vocab_.size() != vectors_.rows())
    throw DimensionError("vocabulary size does not match vector rows");
  if (!vectors_.all_finite()) throw std::invalid_argument("embedding space has non-finite entries");
  index_.reserve(vocab_.size());
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (vocab_[i].empty()) throw std::invalid_argument("empty token at row " + std::to_string(i));
    if (!index_.emplace(vocab_[i], i).second)
      throw std::invalid_argument("duplicate token '" + vocab_[i] + "'");
  }
  if (normalized_) {
    for (std::size_t i = 0; i < vectors_.rows(); ++i) {
      const double norm = std::sqrt(dot(vectors_.row(i), vectors_.row(i)));
      if (std::abs(norm - 1.0) > 1e-9)
        throw std::invalid_argument("row " + std::to_string(i) + " is not unit length");
    }
  }
}

std::optional<std::size_t> EmbeddingSpace::index_of(const std::string& token) const {
  const auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i == line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no) + ": ";
}

}  // namespace

EmbeddingSpace load_text_embeddings(const std::filesystem::path& path, const LoadOptions& options,
                                    LoadStats* stats) {
  std::ifstream in(path);
  if (!in) throw EmbeddingFormatError("cannot open embeddings " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw EmbeddingFormatError(where(path, 1) + "missing header");
  const auto header = split_spaces(line);
  std::size_t count = 0, dim = 0;
  if (header.size() != 2 || !parse_number(header[0], count) || !parse_number(header[1], dim) ||
      dim == 0)
    throw EmbeddingFormatError(where(path, 1) + "malformed header, expected \"count dim\"");

  const std::size_t keep = std::min(count, options.max_vocab);
  std::vector<std::string> vocab;
  std::vector<double> values;
  vocab.reserve(std::min<std::size_t>(keep, 1 << 20));
  std::unordered_map<std::string, std::size_t> seen;
  LoadStats local;
  local.header_count = count;

  std::size_t line_no = 1;
  std::size_t read_rows = 0;
  while (vocab.size() < keep && read_rows < count) {
    if (!std::getline(in, line))
      throw EmbeddingFormatError(where(path, line_no + 1) + "file ends before the declared " +
                                 std::to_string(count) + " rows");
    ++line_no;
    ++read_rows;
    const auto fields = split_spaces(line);
    if (fields.size() != dim + 1)
      throw EmbeddingFormatError(where(path, line_no) + "expected " + std::to_string(dim + 1) +
                                 " fields, found " + std::to_string(fields.size()));
    std::string token(fields[0]);
    if (seen.contains(token)) {
      ++local.duplicates_skipped;
      continue;
    }
    const std::size_t offset = values.size();
    values.resize(offset + dim);
    double sq = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      double v = 0.0;
      if (!parse_number(fields[c + 1], v) || !std::isfinite(v))
        throw EmbeddingFormatError(where(path, line_no) + "non-finite or unparsable value '" +
                                   std::string(fields[c + 1]) + "'");
      values[offset + c] = v;
      sq += v * v;
    }
    if (options.normalize) {
      if (sq == 0.0)
        throw EmbeddingFormatError(where(path, line_no) + "zero vector for '" + token +
                                   "' cannot be normalized");
      const double norm = std::sqrt(sq);
      for (std::size_t c = 0; c < dim; ++c) values[offset + c] /= norm;
    }
    seen.emplace(token, vocab.size());
    vocab.push_back(std::move(token));
  }
  if (vocab.empty()) throw EmbeddingFormatError(path.string() + ": no embeddings");

  if (local.duplicates_skipped > 0)
    std::cerr << "warning: " << path.string() << ": skipped " << local.duplicates_skipped
              << " duplicate token(s)\n";
  if (stats) *stats = local;

  Matrix vectors(vocab.size(), dim);
  std::ranges::copy(values, vectors.data().begin());
  return EmbeddingSpace(options.lang, std::move(vocab), std::move(vectors), options.normalize);
}

void save_text_embeddings(const EmbeddingSpace& space, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw EmbeddingFormatError("cannot write embeddings " + path.string());
  std::fprintf(f, "%zu %zu\n", space.size(), space.dim());
  for (std::size_t i = 0; i < space.size(); ++i) {
    std::fputs(space.token(i).c_str(), f);
    for (double v : space.vectors().row(i)) std::fprintf(f, " %.17g", v);
    std::fputc('\n', f);
  }
  const bool failed = std::ferror(f) != 0;
  if (std::fclose(f) != 0 || failed)
    throw EmbeddingFormatError("write failed for " + path.string());
}

Matrix normalized_rows(Matrix m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto row = m.row(i);
    const double norm = std::sqrt(dot(row, row));
    if (norm == 0.0) throw std::invalid_argument("cannot normalize zero row " + std::to_string(i));
    for (double& v : row) v /= norm;
  }
  return m;
}

EmbeddingSpace normalize_rows(const EmbeddingSpace& space) {
  return EmbeddingSpace(space.lang(), space.vocab(), normalized_rows(space.vectors()), true);
}

std::string synthetic_token(char prefix, std::size_t index, std::size_t n) {
  std::size_t width = 3;
  for (std::size_t x = n > 0 ? n - 1 : 0; x >= 1000; x /= 10) ++width;
  std::string digits = std::to_string(index);
  if (digits.size() < width) digits.insert(0, width - digits.size(), '0');
  return prefix + digits;
}

SyntheticPair generate_synthetic_pair(const SyntheticOptions& options) {
  const std::size_t n = options.n;
  const std::size_t d = options.d;
  if (d == 0 || n < d) throw std::invalid_argument("synthetic pair needs n >= d >= 1");
  if (!(options.noise_sigma >= 0.0)) throw std::invalid_argument("noise_sigma must be >= 0");
  if (options.shape == SourceShape::Clustered && options.clusters == 0)
    throw std::invalid_argument("clustered source needs at least one cluster");

  Rng rng = make_stream(options.seed, "synth");
  std::normal_distribution<double> gauss(0.0, 1.0);

  Matrix source(n, d);
  if (options.shape == SourceShape::Isotropic) {
    for (double& x : source.data()) x = gauss(rng);
  } else {
    Matrix centers(options.clusters, d);
    for (double& x : centers.data()) x = gauss(rng);
    std::vector<double> weights(options.clusters);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    for (double& w : weights) w = unif(rng);
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    for (std::size_t i = 0; i < n; ++i) {
      const auto center = centers.row(pick(rng));
      auto row = source.row(i);
      for (std::size_t c = 0; c < d; ++c) row[c] = center[c] + options.cluster_spread * gauss(rng);
    }
  }
  if (options.normalize) source = normalized_rows(std::move(source));

  const Matrix rotation = random_orthogonal(d, stream_seed(options.seed, "synth-rotation"));
  Matrix rotated = apply_map(rotation, source);
  if (options.noise_sigma > 0.0)
    for (double& x : rotated.data()) x += options.noise_sigma * gauss(rng);
  if (options.normalize) rotated = normalized_rows(std::move(rotated));

  std::vector<std::size_t> position(n);
  std::iota(position.begin(), position.end(), std::size_t{0});
  if (options.shuffle_target) std::shuffle(position.begin(), position.end(), rng);

  Matrix target(n, d);
  std::vector<std::string> source_vocab(n), target_vocab(n);
  TranslationDictionary dict;
  for (std::size_t i = 0; i < n; ++i) {
    std::ranges::copy(rotated.row(i), target.row(position[i]).begin());
    source_vocab[i] = synthetic_token('s', i, n);
    target_vocab[i] = synthetic_token('t', i, n);
  }
  for (std::size_t i = 0; i < n; ++i) dict.add(source_vocab[i], target_vocab[position[i]]);

  return SyntheticPair{
      EmbeddingSpace("src", std::move(source_vocab), std::move(source), options.normalize),
      EmbeddingSpace("tgt", std::move(target_vocab), std::move(target), options.normalize),
      rotation,
      std::move(dict),
      std::move(position),
      options.noise_sigma,
  };
}

}  // namespace lexalign
