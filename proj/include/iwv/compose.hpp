#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "iwv/embeddings.hpp"
#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/lexicons.hpp"
#include "iwv/pos.hpp"

namespace iwv {

struct Sentence {
  std::vector<std::string> tokens;
  int label = -1;  // 0 = negative, 1 = positive, -1 = unlabeled
};

namespace detail {
inline bool is_separator_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '(':
    case ')':
    case '"':
    case '\'':
      return true;
    default:
      return false;
  }
}
}  // namespace detail

// Lowercases, splits on whitespace, and breaks the punctuation marks
// .,!?;:()"' out as standalone tokens; contractions therefore split on the
// apostrophe ("don't" -> "don", "'", "t"). Bytes >= 0x80 pass through
// untouched.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (char ch : text) {
    const unsigned char uc = static_cast<unsigned char>(ch);
    if (uc < 0x80 && std::isspace(uc)) {
      flush();
      continue;
    }
    char c = ch;
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (detail::is_separator_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

struct RowProvenance {
  BaseSource base = BaseSource::RandomOov;
  std::string tag;
  std::uint32_t lexicon_hits = 0;
};

// Per-sentence feature matrix: one row per token, every row the same width.
struct IwvMatrix {
  std::size_t dim = 0;
  std::vector<std::vector<float>> rows;
  std::vector<RowProvenance> provenance;
  int label = -1;

  std::size_t row_count() const { return rows.size(); }
};

// Immutable stores a feature build draws from. Pointers may be null when the
// corresponding slice is disabled by the FeatureConfig.
struct FeatureStores {
  const EmbeddingTable* w2v = nullptr;
  const EmbeddingTable* glove = nullptr;
  const TaggerModel* tagger = nullptr;
  const PosCodebook* codebook = nullptr;
  const LexiconSet* lexicons = nullptr;
};

enum class BaseLookup : std::uint8_t { Chain, W2vOnly, GloveOnly };

// Which slices a feature matrix carries. The defaults describe the full
// improved-word-vector configuration; the base-only variants are the
// comparison baselines.
struct FeatureConfig {
  std::string label = "IWV";
  BaseLookup base = BaseLookup::Chain;
  bool include_pos = true;
  bool include_lex = true;

  static FeatureConfig iwv() { return {}; }
  static FeatureConfig w2v_only() { return {"Word2Vec", BaseLookup::W2vOnly, false, false}; }
  static FeatureConfig glove_only() { return {"GloVe", BaseLookup::GloveOnly, false, false}; }
};

namespace detail {

inline const EmbeddingTable* primary_table(const FeatureStores& stores, const FeatureConfig& fc) {
  switch (fc.base) {
    case BaseLookup::Chain:
    case BaseLookup::W2vOnly:
      return stores.w2v;
    default:
      return stores.glove;
  }
}

}  // namespace detail

// Feature width implied by a configuration; validates that the stores it
// needs are present.
inline std::size_t feature_dim(const FeatureStores& stores, const FeatureConfig& fc) {
  const EmbeddingTable* primary = detail::primary_table(stores, fc);
  if (primary == nullptr) throw ConfigError("feature config needs an embedding table");
  if (fc.base == BaseLookup::Chain && stores.glove == nullptr) {
    throw ConfigError("chain lookup needs both w2v and glove tables");
  }
  std::size_t d = primary->dim();
  if (fc.include_pos) {
    if (stores.tagger == nullptr || stores.codebook == nullptr) {
      throw ConfigError("feature config needs a tagger and a pos codebook");
    }
    d += stores.codebook->dim();
  }
  if (fc.include_lex) {
    if (stores.lexicons == nullptr) throw ConfigError("feature config needs lexicons");
    d += stores.lexicons->size();
  }
  return d;
}

// Builds the per-token rows: base slice, then POS slice, then lexicon slice.
// The base and lexicon slices of row i depend only on token i; the POS slice
// also sees the surrounding tokens through the tagger.
inline IwvMatrix build_feature_matrix(const Sentence& sentence, const FeatureStores& stores,
                                      const FeatureConfig& fc, std::uint64_t seed) {
  if (sentence.tokens.empty()) throw DataError("cannot build features for an empty sentence");
  const std::size_t dim = feature_dim(stores, fc);

  std::vector<std::string> tags;
  if (fc.include_pos) tags = tag_sentence(*stores.tagger, sentence.tokens);

  IwvMatrix m;
  m.dim = dim;
  m.label = sentence.label;
  m.rows.reserve(sentence.tokens.size());
  m.provenance.reserve(sentence.tokens.size());

  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    const std::string& tok = sentence.tokens[i];
    BaseVector base;
    switch (fc.base) {
      case BaseLookup::Chain:
        base = lookup_chain(tok, *stores.w2v, *stores.glove, seed);
        break;
      case BaseLookup::W2vOnly:
        base = lookup_single(tok, *stores.w2v, BaseSource::W2v, seed);
        break;
      case BaseLookup::GloveOnly:
        base = lookup_single(tok, *stores.glove, BaseSource::Glove, seed);
        break;
    }
    std::vector<float> row;
    row.reserve(dim);
    row.insert(row.end(), base.values.begin(), base.values.end());
    RowProvenance prov;
    prov.base = base.provenance;
    if (fc.include_pos) {
      const auto pv = pos_vector(*stores.codebook, tags[i]);
      row.insert(row.end(), pv.begin(), pv.end());
      prov.tag = tags[i];
    }
    if (fc.include_lex) {
      const auto lf = lexicon_feature(tok, *stores.lexicons);
      row.insert(row.end(), lf.begin(), lf.end());
      prov.lexicon_hits = lexicon_hits(tok, *stores.lexicons);
    }
    m.rows.push_back(std::move(row));
    m.provenance.push_back(std::move(prov));
  }
  return m;
}

// The full composition: base chain + POS vector + lexicon slots.
inline IwvMatrix build_iwv(const Sentence& sentence, const EmbeddingTable& w2v,
                           const EmbeddingTable& glove, const TaggerModel& tagger,
                           const PosCodebook& codebook, const LexiconSet& lexicons,
                           std::uint64_t seed) {
  FeatureStores stores{&w2v, &glove, &tagger, &codebook, &lexicons};
  return build_feature_matrix(sentence, stores, FeatureConfig::iwv(), seed);
}

// Fixed-size batch: items padded (with all-zero rows) or truncated to
// max_len. lengths[i] marks how many leading rows of item i are real.
struct PaddedBatch {
  std::size_t max_len = 0;
  std::size_t dim = 0;
  std::vector<float> tensor;  // size() * max_len * dim, row-major
  std::vector<std::uint32_t> lengths;
  std::vector<int> labels;  // -1 = unlabeled

  std::size_t size() const { return lengths.size(); }
  const float* item(std::size_t i) const { return tensor.data() + i * max_len * dim; }
  const float* row(std::size_t i, std::size_t t) const { return item(i) + t * dim; }
  bool valid(std::size_t i, std::size_t t) const { return t < lengths[i]; }
};

inline PaddedBatch make_batch(const std::vector<IwvMatrix>& matrices, std::size_t max_len) {
  if (max_len == 0) throw ConfigError("make_batch: max_len must be positive");
  PaddedBatch b;
  b.max_len = max_len;
  b.dim = matrices.empty() ? 0 : matrices.front().dim;
  b.tensor.assign(matrices.size() * max_len * b.dim, 0.0f);
  b.lengths.reserve(matrices.size());
  b.labels.reserve(matrices.size());
  for (std::size_t i = 0; i < matrices.size(); ++i) {
    const IwvMatrix& m = matrices[i];
    if (m.dim != b.dim) {
      throw ConfigError("make_batch: matrix dim " + std::to_string(m.dim) +
                        " differs from batch dim " + std::to_string(b.dim));
    }
    const std::size_t n = std::min(m.rows.size(), max_len);
    float* dst = b.tensor.data() + i * max_len * b.dim;
    for (std::size_t t = 0; t < n; ++t) {
      std::memcpy(dst + t * b.dim, m.rows[t].data(), b.dim * sizeof(float));
    }
    b.lengths.push_back(static_cast<std::uint32_t>(n));
    b.labels.push_back(m.label);
  }
  return b;
}

// Feature cache, the hand-off between `build-vectors` and `train`:
//   int32 count, int32 max_len, int32 dim (little endian)
//   per sentence: max_len*dim float32 row-major, then one label byte
//                 (0, 1, or 0xFF for unlabeled).
// True lengths are recovered by trimming trailing all-zero rows (real rows
// are never all-zero: the POS slice is a nonzero codebook vector and base
// vectors come from files or the OOV generator), with a floor of one row.
inline void save_feature_cache(const PaddedBatch& batch, const std::filesystem::path& path) {
  std::string out;
  out.reserve(12 + batch.size() * (batch.max_len * batch.dim * 4 + 1));
  append_u32_le(out, static_cast<std::uint32_t>(batch.size()));
  append_u32_le(out, static_cast<std::uint32_t>(batch.max_len));
  append_u32_le(out, static_cast<std::uint32_t>(batch.dim));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const float* it = batch.item(i);
    for (std::size_t j = 0; j < batch.max_len * batch.dim; ++j) append_f32_le(out, it[j]);
    const int label = batch.labels[i];
    out.push_back(label < 0 ? static_cast<char>(0xFF) : static_cast<char>(label));
  }
  write_file_bytes(path, out);
}

inline PaddedBatch load_feature_cache(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);
  ByteReader r(bytes);
  PaddedBatch b;
  const std::uint32_t count = r.read_u32_le("feature cache header");
  b.max_len = r.read_u32_le("feature cache header");
  b.dim = r.read_u32_le("feature cache header");
  const std::size_t item_floats = b.max_len * b.dim;
  b.tensor.resize(static_cast<std::size_t>(count) * item_floats);
  b.lengths.reserve(count);
  b.labels.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string_view raw = r.read_bytes(item_floats * 4, "feature cache item");
    float* dst = b.tensor.data() + static_cast<std::size_t>(i) * item_floats;
    for (std::size_t j = 0; j < item_floats; ++j) dst[j] = load_f32_le(raw.data() + j * 4);
    const std::string_view lb = r.read_bytes(1, "feature cache label");
    const unsigned char lbyte = static_cast<unsigned char>(lb[0]);
    if (lbyte != 0xFF && lbyte > 1) {
      throw ParseError("feature cache label byte out of range", r.pos() - 1);
    }
    b.labels.push_back(lbyte == 0xFF ? -1 : static_cast<int>(lbyte));

    std::size_t n = b.max_len;
    while (n > 1) {
      const float* row = dst + (n - 1) * b.dim;
      bool all_zero = true;
      for (std::size_t d = 0; d < b.dim; ++d) {
        if (row[d] != 0.0f) {
          all_zero = false;
          break;
        }
      }
      if (!all_zero) break;
      --n;
    }
    b.lengths.push_back(static_cast<std::uint32_t>(b.max_len == 0 ? 0 : n));
  }
  if (!r.eof()) throw ParseError("trailing bytes after feature cache payload", r.pos());
  return b;
}

}  // namespace iwv
