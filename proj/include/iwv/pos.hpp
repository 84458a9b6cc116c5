#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/rng.hpp"
#include "iwv/strings.hpp"

namespace iwv {

// Ordered set of distinct POS tag strings. Order fixes tag indices for the
// tagger's weight vectors and for tie-breaking.
class TagSet {
 public:
  TagSet() = default;

  static TagSet from_tags(std::vector<std::string> tags) {
    TagSet ts;
    ts.tags_ = std::move(tags);
    if (ts.tags_.empty()) throw ConfigError("tag set must contain at least one tag");
    for (std::size_t i = 0; i < ts.tags_.size(); ++i) {
      if (ts.tags_[i].empty()) throw ConfigError("empty tag in tag set");
      if (!ts.index_.emplace(ts.tags_[i], static_cast<int>(i)).second) {
        throw ConfigError("duplicate tag in tag set: " + ts.tags_[i]);
      }
    }
    return ts;
  }

  // The 45-tag Penn Treebank set: 36 word classes plus punctuation.
  static const TagSet& penn_treebank() {
    static const TagSet ts = from_tags({
        "CC",  "CD",  "DT",   "EX",  "FW",  "IN",   "JJ",  "JJR", "JJS",
        "LS",  "MD",  "NN",   "NNS", "NNP", "NNPS", "PDT", "POS", "PRP",
        "PRP$", "RB", "RBR",  "RBS", "RP",  "SYM",  "TO",  "UH",  "VB",
        "VBD", "VBG", "VBN",  "VBP", "VBZ", "WDT",  "WP",  "WP$", "WRB",
        "#",   "$",   "''",   "``",  "(",   ")",    ",",   ".",   ":",
    });
    return ts;
  }

  const std::vector<std::string>& tags() const { return tags_; }
  std::size_t size() const { return tags_.size(); }
  const std::string& tag(std::size_t i) const { return tags_[i]; }

  int index_of(std::string_view tag) const {
    auto it = index_.find(tag);
    return it == index_.end() ? -1 : it->second;
  }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int, StringHash, std::equal_to<>> index_;
};

// One constant random vector per tag, generated once from (seed, tag) and
// frozen. Components uniform in [-0.25, +0.25] to keep magnitudes in line
// with base embeddings and OOV vectors.
class PosCodebook {
 public:
  PosCodebook(TagSet tagset, std::size_t dim, std::uint64_t seed)
      : tagset_(std::move(tagset)), dim_(dim), seed_(seed) {
    if (tagset_.size() == 0) throw ConfigError("pos codebook needs a non-empty tag set");
    if (dim_ == 0) throw ConfigError("pos codebook dim must be positive");
    values_.resize(tagset_.size() * dim_);
    for (std::size_t t = 0; t < tagset_.size(); ++t) {
      SplitMix64 rng = keyed_stream(seed_, tagset_.tag(t));
      for (std::size_t d = 0; d < dim_; ++d) {
        values_[t * dim_ + d] = static_cast<float>(rng.next_uniform(-0.25, 0.25));
      }
    }
    for (std::size_t a = 0; a < tagset_.size(); ++a) {
      for (std::size_t b = a + 1; b < tagset_.size(); ++b) {
        if (std::memcmp(values_.data() + a * dim_, values_.data() + b * dim_,
                        dim_ * sizeof(float)) == 0) {
          throw ConfigError("pos codebook collision between tags " + tagset_.tag(a) + " and " +
                            tagset_.tag(b));
        }
      }
    }
  }

  const TagSet& tagset() const { return tagset_; }
  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const float> vector_for(std::string_view tag) const {
    int idx = tagset_.index_of(tag);
    if (idx < 0) throw ConfigError("tag not in codebook: " + std::string(tag));
    return {values_.data() + static_cast<std::size_t>(idx) * dim_, dim_};
  }

  // Text export, one "tag<TAB>v1 v2 ... vdim" line per tag.
  void save(const std::filesystem::path& path) const {
    std::string out;
    char buf[64];
    for (std::size_t t = 0; t < tagset_.size(); ++t) {
      out += tagset_.tag(t);
      out += '\t';
      for (std::size_t d = 0; d < dim_; ++d) {
        if (d > 0) out += ' ';
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(values_[t * dim_ + d]));
        out += buf;
      }
      out += '\n';
    }
    write_file_bytes(path, out);
  }

  static PosCodebook load(const std::filesystem::path& path) {
    const std::string bytes = read_file_auto(path);
    std::vector<std::string> tags;
    std::vector<float> values;
    std::size_t dim = 0;
    std::size_t line_no = 0;
    for (std::string_view line : split(bytes, '\n')) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string_view::npos) throw ParseError("codebook line missing tab", line_no);
      tags.emplace_back(line.substr(0, tab));
      const auto fields = split_ws(line.substr(tab + 1));
      if (dim == 0) dim = fields.size();
      if (fields.empty() || fields.size() != dim) {
        throw ParseError("codebook line has inconsistent width", line_no);
      }
      for (auto f : fields) {
        float v;
        if (!detail_parse_float(f, v)) throw ParseError("non-numeric codebook value", line_no);
        values.push_back(v);
      }
    }
    if (tags.empty()) throw ParseError("codebook file is empty");
    PosCodebook cb;
    cb.tagset_ = TagSet::from_tags(std::move(tags));
    cb.dim_ = dim;
    cb.seed_ = 0;
    cb.values_ = std::move(values);
    return cb;
  }

 private:
  PosCodebook() = default;

  static bool detail_parse_float(std::string_view s, float& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }

  TagSet tagset_;
  std::size_t dim_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<float> values_;
};

inline PosCodebook build_pos_codebook(const TagSet& tagset, std::size_t dim, std::uint64_t seed) {
  return PosCodebook(tagset, dim, seed);
}

inline std::span<const float> pos_vector(const PosCodebook& codebook, std::string_view tag) {
  return codebook.vector_for(tag);
}

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;
};

// CoNLL-style tagged corpus: one "token<TAB>tag" per line, blank line
// between sentences.
inline std::vector<TaggedSentence> read_tagged_corpus(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);
  std::vector<TaggedSentence> corpus;
  TaggedSentence current;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) {
      corpus.push_back(std::move(current));
      current = {};
    }
  };
  for (std::string_view line : split(bytes, '\n')) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) {
      flush();
      continue;
    }
    const std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0 || tab + 1 >= line.size()) {
      throw ParseError("expected \"token<TAB>tag\"", line_no);
    }
    current.tokens.emplace_back(line.substr(0, tab));
    current.tags.emplace_back(trim(line.substr(tab + 1)));
  }
  flush();
  return corpus;
}

namespace tagger_detail {

inline std::string normalize_token(std::string_view w) {
  if (w.find('-') != std::string_view::npos && !w.empty() && w.front() != '-') return "!HYPHEN";
  bool all_digits = !w.empty();
  for (char c : w) {
    if (c < '0' || c > '9') {
      all_digits = false;
      break;
    }
  }
  if (all_digits && w.size() == 4) return "!YEAR";
  if (!w.empty() && w.front() >= '0' && w.front() <= '9') return "!DIGITS";
  return ascii_lower(w);
}

inline std::string affix(const std::string& w, std::size_t len, bool suffix) {
  const std::size_t n = std::min(len, w.size());
  return suffix ? w.substr(w.size() - n) : w.substr(0, n);
}

// Context layout: [START2, START1, w0..wn-1, END1, END2]; i indexes tokens,
// so ctx position is i + 2. Feature strings never contain tabs, which the
// model file format relies on.
inline void collect_features(std::size_t i, const std::vector<std::string>& ctx,
                             const std::string& prev, const std::string& prev2,
                             std::vector<std::string>& out) {
  const std::string& w = ctx[i + 2];
  out.clear();
  out.push_back("bias");
  out.push_back("w=" + w);
  out.push_back("suf1=" + affix(w, 1, true));
  out.push_back("suf2=" + affix(w, 2, true));
  out.push_back("suf3=" + affix(w, 3, true));
  out.push_back("pre1=" + affix(w, 1, false));
  out.push_back("pre2=" + affix(w, 2, false));
  out.push_back("pre3=" + affix(w, 3, false));
  out.push_back("t-1=" + prev);
  out.push_back("t-2=" + prev2);
  out.push_back("t-1|t-2=" + prev + "|" + prev2);
  out.push_back("t-1|w=" + prev + "|" + w);
  out.push_back("w-1=" + ctx[i + 1]);
  out.push_back("w-1suf3=" + affix(ctx[i + 1], 3, true));
  out.push_back("w-2=" + ctx[i]);
  out.push_back("w+1=" + ctx[i + 3]);
  out.push_back("w+1suf3=" + affix(ctx[i + 3], 3, true));
  out.push_back("w+2=" + ctx[i + 4]);
}

inline std::vector<std::string> padded_context(std::span<const std::string> tokens) {
  std::vector<std::string> ctx;
  ctx.reserve(tokens.size() + 4);
  ctx.emplace_back("-START2-");
  ctx.emplace_back("-START-");
  for (const auto& t : tokens) ctx.push_back(normalize_token(t));
  ctx.emplace_back("-END-");
  ctx.emplace_back("-END2-");
  return ctx;
}

}  // namespace tagger_detail

// Averaged perceptron tagger with greedy left-to-right decoding. Scores are
// accumulated in feature order, never in hash-map order, so predictions are
// reproducible bit for bit.
class TaggerModel {
 public:
  TaggerModel() = default;
  explicit TaggerModel(TagSet tagset) : tagset_(std::move(tagset)) {}

  const TagSet& tagset() const { return tagset_; }
  bool averaged() const { return averaged_; }
  std::size_t feature_count() const { return weights_.size(); }

  std::vector<std::string> tag(std::span<const std::string> tokens) const {
    std::vector<std::string> out;
    if (tokens.empty()) return out;
    out.reserve(tokens.size());
    const auto ctx = tagger_detail::padded_context(tokens);
    std::string prev = "-START-";
    std::string prev2 = "-START2-";
    std::vector<std::string> feats;
    std::vector<double> scores(tagset_.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      tagger_detail::collect_features(i, ctx, prev, prev2, feats);
      const int best = score_argmax(feats, scores);
      out.push_back(tagset_.tag(static_cast<std::size_t>(best)));
      prev2 = std::move(prev);
      prev = out.back();
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::string out = "iwv-tagger\t1\n";
    out += "averaged\t";
    out += averaged_ ? '1' : '0';
    out += "\ntags\t";
    for (std::size_t i = 0; i < tagset_.size(); ++i) {
      if (i > 0) out += ' ';
      out += tagset_.tag(i);
    }
    out += '\n';
    // Sorted for a deterministic file.
    std::map<std::string_view, const std::vector<double>*> ordered;
    for (const auto& [feat, w] : weights_) ordered.emplace(feat, &w);
    char buf[64];
    for (const auto& [feat, w] : ordered) {
      for (std::size_t t = 0; t < w->size(); ++t) {
        if ((*w)[t] == 0.0) continue;
        out += feat;
        out += '\t';
        out += std::to_string(t);
        out += '\t';
        std::snprintf(buf, sizeof(buf), "%.17g", (*w)[t]);
        out += buf;
        out += '\n';
      }
    }
    write_file_bytes(path, out);
  }

  static TaggerModel load(const std::filesystem::path& path) {
    const std::string bytes = read_file_auto(path);
    const auto lines = split(bytes, '\n');
    if (lines.empty() || lines[0] != "iwv-tagger\t1") {
      throw ParseError("not an iwv tagger model file (or unsupported version)");
    }
    TaggerModel model;
    std::size_t line_no = 1;
    bool tags_seen = false;
    for (std::size_t li = 1; li < lines.size(); ++li) {
      ++line_no;
      std::string_view line = lines[li];
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const auto fields = split(line, '\t');
      if (fields[0] == "averaged" && fields.size() == 2) {
        model.averaged_ = fields[1] == "1";
        continue;
      }
      if (fields[0] == "tags" && fields.size() == 2) {
        std::vector<std::string> tags;
        for (auto t : split_ws(fields[1])) tags.emplace_back(t);
        model.tagset_ = TagSet::from_tags(std::move(tags));
        tags_seen = true;
        continue;
      }
      if (fields.size() != 3) throw ParseError("malformed tagger model line", line_no);
      if (!tags_seen) throw ParseError("tagger weights before tags line", line_no);
      long long tag_idx = 0;
      double w = 0;
      if (!parse_ll(fields[1], tag_idx) || tag_idx < 0 ||
          tag_idx >= static_cast<long long>(model.tagset_.size()) || !parse_dbl(fields[2], w)) {
        throw ParseError("malformed tagger weight", line_no);
      }
      auto [it, fresh] = model.weights_.try_emplace(std::string(fields[0]));
      if (fresh) it->second.assign(model.tagset_.size(), 0.0);
      it->second[static_cast<std::size_t>(tag_idx)] = w;
    }
    if (!tags_seen) throw ParseError("tagger model missing tags line");
    return model;
  }

 private:
  friend TaggerModel train_tagger(const std::vector<TaggedSentence>&, int, std::uint64_t,
                                  const TagSet&);

  static bool parse_ll(std::string_view s, long long& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }
  static bool parse_dbl(std::string_view s, double& out) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
  }

  int score_argmax(const std::vector<std::string>& feats, std::vector<double>& scores) const {
    std::fill(scores.begin(), scores.end(), 0.0);
    for (const auto& f : feats) {
      auto it = weights_.find(f);
      if (it == weights_.end()) continue;
      const auto& w = it->second;
      for (std::size_t t = 0; t < scores.size(); ++t) scores[t] += w[t];
    }
    int best = 0;
    for (std::size_t t = 1; t < scores.size(); ++t) {
      if (scores[t] > scores[best]) best = static_cast<int>(t);
    }
    return best;
  }

  TagSet tagset_;
  bool averaged_ = false;
  std::unordered_map<std::string, std::vector<double>, StringHash, std::equal_to<>> weights_;
};

// Trains the averaged perceptron. Sentence order is shuffled each epoch from
// `seed`; prior-tag features use the model's own predictions, as in standard
// greedy training. Final weights are the average over all update steps.
inline TaggerModel train_tagger(const std::vector<TaggedSentence>& corpus, int epochs,
                                std::uint64_t seed,
                                const TagSet& tagset = TagSet::penn_treebank()) {
  if (corpus.empty()) throw DataError("tagged corpus is empty");
  if (epochs < 1) throw ConfigError("tagger epochs must be positive");
  for (std::size_t s = 0; s < corpus.size(); ++s) {
    if (corpus[s].tokens.empty()) throw DataError("empty tagged sentence", s);
    if (corpus[s].tokens.size() != corpus[s].tags.size()) {
      throw DataError("token/tag count mismatch", s);
    }
    for (const auto& t : corpus[s].tags) {
      if (tagset.index_of(t) < 0) throw DataError("tag \"" + t + "\" outside tag set", s);
    }
  }

  const std::size_t m = tagset.size();
  struct Acc {
    std::vector<double> w, total;
    std::vector<std::uint64_t> stamp;
  };
  std::unordered_map<std::string, Acc, StringHash, std::equal_to<>> acc;
  std::uint64_t updates = 0;

  auto bump = [&](const std::string& feat, std::size_t t, double delta) {
    auto [it, fresh] = acc.try_emplace(feat);
    if (fresh) {
      it->second.w.assign(m, 0.0);
      it->second.total.assign(m, 0.0);
      it->second.stamp.assign(m, 0);
    }
    Acc& e = it->second;
    e.total[t] += static_cast<double>(updates - e.stamp[t]) * e.w[t];
    e.stamp[t] = updates;
    e.w[t] += delta;
  };

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  SplitMix64 shuffle_rng = keyed_stream(seed, "tagger-shuffle");

  std::vector<std::string> feats;
  std::vector<double> scores(m);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    for (std::size_t si : order) {
      const TaggedSentence& sent = corpus[si];
      const auto ctx = tagger_detail::padded_context(sent.tokens);
      std::string prev = "-START-";
      std::string prev2 = "-START2-";
      for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
        tagger_detail::collect_features(i, ctx, prev, prev2, feats);
        std::fill(scores.begin(), scores.end(), 0.0);
        for (const auto& f : feats) {
          auto it = acc.find(f);
          if (it == acc.end()) continue;
          for (std::size_t t = 0; t < m; ++t) scores[t] += it->second.w[t];
        }
        std::size_t guess = 0;
        for (std::size_t t = 1; t < m; ++t) {
          if (scores[t] > scores[guess]) guess = t;
        }
        const std::size_t truth = static_cast<std::size_t>(tagset.index_of(sent.tags[i]));
        ++updates;
        if (guess != truth) {
          for (const auto& f : feats) {
            bump(f, truth, +1.0);
            bump(f, guess, -1.0);
          }
        }
        prev2 = std::move(prev);
        prev = tagset.tag(guess);
      }
    }
  }

  TaggerModel model(tagset);
  model.averaged_ = true;
  for (auto& [feat, e] : acc) {
    std::vector<double> avg(m, 0.0);
    bool any = false;
    for (std::size_t t = 0; t < m; ++t) {
      e.total[t] += static_cast<double>(updates - e.stamp[t]) * e.w[t];
      avg[t] = e.total[t] / static_cast<double>(updates);
      if (avg[t] != 0.0) any = true;
    }
    if (any) model.weights_.emplace(feat, std::move(avg));
  }
  return model;
}

inline std::vector<std::string> tag_sentence(const TaggerModel& model,
                                             std::span<const std::string> tokens) {
  return model.tag(tokens);
}

}  // namespace iwv
