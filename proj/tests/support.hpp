#pragma once

// Shared fixtures: temp dirs, synthetic stores, and byte-level file builders
// kept independent of the library's own writers so the parsers are checked
// against the formats, not against themselves.

#include <unistd.h>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "iwv/compose.hpp"
#include "iwv/embeddings.hpp"
#include "iwv/io.hpp"
#include "iwv/lexicons.hpp"
#include "iwv/pos.hpp"
#include "iwv/rng.hpp"

namespace testsup {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    const auto base = fs::temp_directory_path();
    do {
      path_ = base / ("iwv-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    } while (fs::exists(path_));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path file(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Raw word2vec-binary bytes, assembled by hand.
inline std::string w2v_bytes(const std::vector<std::pair<std::string, std::vector<float>>>& entries,
                             long long dim, long long vocab_override = -1) {
  std::string out;
  out += std::to_string(vocab_override >= 0 ? vocab_override
                                            : static_cast<long long>(entries.size()));
  out += ' ';
  out += std::to_string(dim);
  out += '\n';
  for (const auto& [token, values] : entries) {
    out += token;
    out += ' ';
    for (float v : values) iwv::append_f32_le(out, v);
    out += '\n';
  }
  return out;
}

inline std::string glove_text(
    const std::vector<std::pair<std::string, std::vector<float>>>& entries) {
  std::string out;
  char buf[64];
  for (const auto& [token, values] : entries) {
    out += token;
    for (float v : values) {
      std::snprintf(buf, sizeof(buf), " %.9g", static_cast<double>(v));
      out += buf;
    }
    out += '\n';
  }
  return out;
}

inline std::vector<float> random_vector(std::size_t dim, iwv::SplitMix64& rng, double lo = -1.0,
                                        double hi = 1.0) {
  std::vector<float> v(dim);
  for (auto& c : v) c = static_cast<float>(rng.next_uniform(lo, hi));
  return v;
}

inline iwv::EmbeddingTable make_table(const std::vector<std::string>& tokens, std::size_t dim,
                                      std::uint64_t seed, const std::string& label) {
  iwv::EmbeddingTable table(dim, label);
  iwv::SplitMix64 rng(seed);
  for (const auto& t : tokens) {
    const auto v = random_vector(dim, rng);
    table.insert(t, v.data());
  }
  return table;
}

// TSV lexicon file with optional extra columns, NRC style.
inline std::string lexicon_tsv(const std::vector<std::pair<std::string, double>>& entries,
                               bool extra_columns = false) {
  std::string out;
  char buf[64];
  for (const auto& [term, score] : entries) {
    out += term;
    std::snprintf(buf, sizeof(buf), "\t%.6f", score);
    out += buf;
    if (extra_columns) out += "\t3\t1";
    out += '\n';
  }
  return out;
}

inline std::vector<iwv::TaggedSentence> toy_treebank() {
  auto s = [](std::vector<std::string> tokens, std::vector<std::string> tags) {
    return iwv::TaggedSentence{std::move(tokens), std::move(tags)};
  };
  return {
      s({"the", "dog", "runs", "."}, {"DT", "NN", "VBZ", "."}),
      s({"a", "cat", "runs", "."}, {"DT", "NN", "VBZ", "."}),
      s({"the", "bird", "sings", "."}, {"DT", "NN", "VBZ", "."}),
      s({"dogs", "run", "fast", "."}, {"NNS", "VBP", "RB", "."}),
      s({"the", "big", "dog", "barks", "."}, {"DT", "JJ", "NN", "VBZ", "."}),
      s({"she", "runs", "."}, {"PRP", "VBZ", "."}),
      s({"it", "is", "good", "."}, {"PRP", "VBZ", "JJ", "."}),
      s({"the", "quick", "cat", "sees", "the", "dog", "."},
        {"DT", "JJ", "NN", "VBZ", "DT", "NN", "."}),
      s({"a", "good", "movie", "."}, {"DT", "JJ", "NN", "."}),
      s({"he", "likes", "the", "movie", "."}, {"PRP", "VBZ", "DT", "NN", "."}),
  };
}

inline std::string conll_text(const std::vector<iwv::TaggedSentence>& corpus) {
  std::string out;
  for (const auto& sent : corpus) {
    for (std::size_t i = 0; i < sent.tokens.size(); ++i) {
      out += sent.tokens[i];
      out += '\t';
      out += sent.tags[i];
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> random_tokens(std::size_t count, std::uint64_t seed,
                                              const std::string& prefix = "tok") {
  std::vector<std::string> out;
  out.reserve(count);
  iwv::SplitMix64 rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::string t = prefix + std::to_string(i) + "_";
    const std::size_t extra = 1 + rng.next_below(6);
    for (std::size_t j = 0; j < extra; ++j) {
      t += static_cast<char>('a' + rng.next_below(26));
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Six small lexicons whose score endpoints mirror the published resource
// ranges; filler entries are spread strictly inside the endpoints.
inline iwv::LexiconSet fixture_lexicon_set(const TempDir& dir, std::size_t filler_per_lexicon = 40,
                                           std::uint64_t seed = 7) {
  struct LexiconRange {
    const char* name;
    double lo, hi;
  };
  const std::vector<LexiconRange> specs = {
      {"nrc_emoticon_context", -5.844, 4.495}, {"nrc_hashtag_context", -10.025, 10.661},
      {"nrc_emoticon", -4.999, 5.0},           {"nrc_hashtag", -6.925, 7.526},
      {"semeval2015_twitter", -0.984, 0.984},  {"amazon_laptop", -5.27, 3.702},
  };
  iwv::LexiconSet set;
  iwv::SplitMix64 rng(seed);
  for (std::size_t k = 0; k < specs.size(); ++k) {
    std::vector<std::pair<std::string, double>> entries;
    entries.emplace_back("lex" + std::to_string(k) + "_min", specs[k].lo);
    entries.emplace_back("lex" + std::to_string(k) + "_max", specs[k].hi);
    entries.emplace_back("lex" + std::to_string(k) + "_zero", 0.0);
    for (std::size_t j = 0; j < filler_per_lexicon; ++j) {
      entries.emplace_back("lex" + std::to_string(k) + "_w" + std::to_string(j),
                           rng.next_uniform(specs[k].lo * 0.98, specs[k].hi * 0.98));
    }
    const auto path = dir.file(std::string(specs[k].name) + ".tsv");
    iwv::write_file_bytes(path, lexicon_tsv(entries, true));
    set.lexicons.push_back(iwv::load_lexicon({path}, specs[k].name));
  }
  return set;
}

}  // namespace testsup
