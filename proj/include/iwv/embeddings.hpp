#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/rng.hpp"
#include "iwv/strings.hpp"

namespace iwv {

enum class BaseSource : std::uint8_t { W2v, Glove, RandomOov };

inline const char* to_string(BaseSource s) {
  switch (s) {
    case BaseSource::W2v:
      return "w2v";
    case BaseSource::Glove:
      return "glove";
    default:
      return "oov";
  }
}

// Token -> fixed-width float32 vector table loaded from a pre-trained
// embedding file. Immutable after load; lookups are safe from any number of
// concurrent readers. Insertion order is preserved so a written file round
// trips bit-exactly.
class EmbeddingTable {
 public:
  EmbeddingTable(std::size_t dim, std::string source_label)
      : dim_(dim), source_label_(std::move(source_label)) {
    if (dim_ == 0) throw ParseError("embedding dim must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return tokens_.size(); }
  const std::string& source_label() const { return source_label_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  bool contains(std::string_view token) const { return index_.find(token) != index_.end(); }

  // Pointer to dim() floats for `token`, or nullptr when absent.
  const float* find(std::string_view token) const {
    auto it = index_.find(token);
    return it == index_.end() ? nullptr : values_.data() + it->second * dim_;
  }

  const float* row(std::size_t i) const { return values_.data() + i * dim_; }

  // Returns true when the token already existed (its vector is replaced in
  // place; duplicate records resolve to the last occurrence).
  bool insert(std::string_view token, const float* values) {
    auto it = index_.find(token);
    if (it != index_.end()) {
      std::copy(values, values + dim_, values_.begin() + static_cast<std::ptrdiff_t>(it->second * dim_));
      return true;
    }
    index_.emplace(std::string(token), tokens_.size());
    tokens_.emplace_back(token);
    values_.insert(values_.end(), values, values + dim_);
    return false;
  }

 private:
  std::size_t dim_;
  std::string source_label_;
  std::vector<std::string> tokens_;
  std::vector<float> values_;  // tokens_.size() * dim_, row-major
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
};

namespace detail {

inline bool parse_i64(std::string_view s, long long& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_f32(std::string_view s, float& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool parse_f64(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

inline bool is_record_ws(char c) { return c == ' ' || c == '\n' || c == '\r' || c == '\t'; }

}  // namespace detail

// word2vec binary format: ASCII header "<vocab_count> <dim>\n", then per
// record a whitespace-terminated token followed by dim little-endian float32
// values. Gzip-compressed files are detected by magic bytes and inflated.
inline EmbeddingTable load_word2vec_binary(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);

  const std::size_t eol = bytes.find('\n');
  if (eol == std::string::npos || eol > 128) {
    throw ParseError("malformed word2vec header: missing newline");
  }
  const auto fields = split_ws(std::string_view(bytes).substr(0, eol));
  long long vocab = 0, dim = 0;
  if (fields.size() != 2 || !detail::parse_i64(fields[0], vocab) ||
      !detail::parse_i64(fields[1], dim)) {
    throw ParseError("malformed word2vec header: expected \"<vocab_count> <dim>\"");
  }
  if (dim <= 0) throw ParseError("word2vec header dim must be positive, got " + std::to_string(dim));
  if (vocab < 0) throw ParseError("malformed word2vec header: negative vocab count");

  EmbeddingTable table(static_cast<std::size_t>(dim), "w2v");
  const std::size_t record_bytes = static_cast<std::size_t>(dim) * 4;
  std::vector<float> vec(static_cast<std::size_t>(dim));
  std::size_t pos = eol + 1;
  std::size_t duplicates = 0;

  for (long long i = 0; i < vocab; ++i) {
    while (pos < bytes.size() && detail::is_record_ws(bytes[pos])) ++pos;
    const std::size_t token_start = pos;
    while (pos < bytes.size() && !detail::is_record_ws(bytes[pos])) ++pos;
    if (pos >= bytes.size()) {
      throw ParseError("truncated word2vec record " + std::to_string(i), token_start);
    }
    const std::string_view token(bytes.data() + token_start, pos - token_start);
    ++pos;  // single terminator between token and floats
    if (pos + record_bytes > bytes.size()) {
      throw ParseError("truncated word2vec record " + std::to_string(i), pos);
    }
    for (std::size_t d = 0; d < vec.size(); ++d) {
      vec[d] = load_f32_le(bytes.data() + pos + d * 4);
    }
    pos += record_bytes;
    if (table.insert(token, vec.data())) ++duplicates;
  }
  if (duplicates > 0) {
    std::cerr << "iwv: warning: " << path.string() << ": " << duplicates
              << " duplicate token(s), last occurrence kept\n";
  }
  return table;
}

// GloVe text format: one "token v1 v2 ... vd" line per entry, dimension
// inferred from the first line. Gzip handled as above.
inline EmbeddingTable load_glove_text(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);

  std::optional<EmbeddingTable> table;
  std::vector<float> vec;
  std::size_t line_no = 0;
  std::size_t duplicates = 0;
  std::size_t start = 0;

  while (start <= bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) end = bytes.size();
    std::string_view line(bytes.data() + start, end - start);
    const std::size_t next = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) {
      if (end == bytes.size()) break;
      start = next;
      continue;
    }

    const auto fields = split_ws(line);
    if (fields.size() < 2) {
      throw ParseError("glove line has no vector values", line_no);
    }
    const std::string_view token = fields[0];
    const std::size_t count = fields.size() - 1;
    if (!table) {
      table.emplace(count, "glove");
      vec.resize(count);
    } else if (count != table->dim()) {
      throw ParseError("glove line has " + std::to_string(count) + " values, expected " +
                           std::to_string(table->dim()),
                       line_no);
    }
    for (std::size_t d = 0; d < count; ++d) {
      if (!detail::parse_f32(fields[d + 1], vec[d])) {
        throw ParseError("non-numeric glove field \"" + std::string(fields[d + 1]) + "\"",
                         line_no);
      }
    }
    if (table->insert(token, vec.data())) ++duplicates;
    if (end == bytes.size()) break;
    start = next;
  }

  if (!table) throw ParseError("glove file has no vector lines");
  if (duplicates > 0) {
    std::cerr << "iwv: warning: " << path.string() << ": " << duplicates
              << " duplicate token(s), last occurrence kept\n";
  }
  return *table;
}

inline void save_word2vec_binary(const EmbeddingTable& table, const std::filesystem::path& path) {
  std::string out;
  out.reserve(16 + table.size() * (8 + table.dim() * 4));
  out += std::to_string(table.size());
  out += ' ';
  out += std::to_string(table.dim());
  out += '\n';
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table.tokens()[i];
    out += ' ';
    const float* v = table.row(i);
    for (std::size_t d = 0; d < table.dim(); ++d) append_f32_le(out, v[d]);
    out += '\n';
  }
  write_file_bytes(path, out);
}

// Deterministic out-of-vocabulary vector: components uniform in
// [-0.25, +0.25], drawn from a stream keyed by (global_seed, token). The
// same triple always yields the same bits, on any platform.
inline std::vector<float> oov_vector(std::string_view token, std::size_t dim,
                                     std::uint64_t global_seed) {
  if (dim == 0) throw ConfigError("oov_vector: dim must be positive");
  SplitMix64 rng = keyed_stream(global_seed, token);
  std::vector<float> v(dim);
  for (float& c : v) c = static_cast<float>(rng.next_uniform(-0.25, 0.25));
  return v;
}

// Verbatim lookup first, then lowercased; review corpora are usually
// lowercased while pre-trained vocabularies are case sensitive.
inline const float* find_cased(const EmbeddingTable& table, std::string_view token) {
  if (const float* p = table.find(token)) return p;
  const std::string lower = ascii_lower(token);
  if (lower != token) {
    if (const float* p = table.find(lower)) return p;
  }
  return nullptr;
}

struct BaseVector {
  std::vector<float> values;
  BaseSource provenance = BaseSource::RandomOov;
};

// W2V-first fallback chain: word2vec, then GloVe, then a deterministic
// random vector for out-of-vocabulary tokens.
inline BaseVector lookup_chain(std::string_view token, const EmbeddingTable& w2v,
                               const EmbeddingTable& glove, std::uint64_t global_seed) {
  if (w2v.dim() != glove.dim()) {
    throw ConfigError("embedding dimension mismatch: w2v has " + std::to_string(w2v.dim()) +
                      ", glove has " + std::to_string(glove.dim()));
  }
  if (const float* p = find_cased(w2v, token)) {
    return {std::vector<float>(p, p + w2v.dim()), BaseSource::W2v};
  }
  if (const float* p = find_cased(glove, token)) {
    return {std::vector<float>(p, p + glove.dim()), BaseSource::Glove};
  }
  return {oov_vector(token, w2v.dim(), global_seed), BaseSource::RandomOov};
}

// Single-table variant used by the base-only baselines.
inline BaseVector lookup_single(std::string_view token, const EmbeddingTable& table,
                                BaseSource source, std::uint64_t global_seed) {
  if (const float* p = find_cased(table, token)) {
    return {std::vector<float>(p, p + table.dim()), source};
  }
  return {oov_vector(token, table.dim(), global_seed), BaseSource::RandomOov};
}

}  // namespace iwv
