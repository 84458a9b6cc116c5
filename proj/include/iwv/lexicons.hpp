#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "iwv/embeddings.hpp"
#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/strings.hpp"

namespace iwv {

// Unigram sentiment lexicon with its observed raw score range. Immutable
// after load.
struct Lexicon {
  std::string name;
  std::unordered_map<std::string, double, StringHash, std::equal_to<>> entries;
  double observed_min = 0.0;
  double observed_max = 0.0;

  double max_abs() const { return std::max(std::fabs(observed_min), std::fabs(observed_max)); }

  const double* find(std::string_view term) const {
    auto it = entries.find(term);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Ordered collection of lexicons; the order fixes feature-slot order.
struct LexiconSet {
  std::vector<Lexicon> lexicons;

  std::size_t size() const { return lexicons.size(); }
};

// Loads one lexicon from one or more TSV files ("term<TAB>score", trailing
// columns ignored). Several resources ship as affirmative/negated file
// pairs; entries merge across files with the first occurrence winning in
// the given path order. Terms with internal whitespace are dropped — only
// unigram scores are used.
inline Lexicon load_lexicon(const std::vector<std::filesystem::path>& paths,
                            const std::string& name) {
  if (paths.empty()) throw ConfigError("lexicon \"" + name + "\" has no input files");
  Lexicon lex;
  lex.name = name;
  for (const auto& path : paths) {
    const std::string bytes = read_file_auto(path);
    std::size_t line_no = 0;
    for (std::string_view line : split(bytes, '\n')) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      const std::size_t tab = line.find('\t');
      if (tab == std::string_view::npos) {
        throw ParseError("malformed lexicon line in " + path.string() + ": missing score field",
                         line_no);
      }
      const std::string_view term = line.substr(0, tab);
      std::string_view rest = line.substr(tab + 1);
      const std::size_t tab2 = rest.find('\t');
      if (tab2 != std::string_view::npos) rest = rest.substr(0, tab2);
      if (term.empty() || term.find(' ') != std::string_view::npos) continue;  // not a unigram
      double score = 0.0;
      if (!detail::parse_f64(rest, score)) {
        throw ParseError("non-numeric lexicon score in " + path.string() + ": \"" +
                             std::string(rest) + "\"",
                         line_no);
      }
      lex.entries.emplace(std::string(term), score);  // first occurrence wins
    }
  }
  if (lex.entries.empty()) throw DataError("lexicon \"" + name + "\" has no unigram entries");
  bool first = true;
  for (const auto& [term, score] : lex.entries) {
    if (first) {
      lex.observed_min = lex.observed_max = score;
      first = false;
    } else {
      lex.observed_min = std::min(lex.observed_min, score);
      lex.observed_max = std::max(lex.observed_max, score);
    }
  }
  return lex;
}

// Symmetric scaling into [-0.995, +0.995]: raw * 0.995 / max(|min|, |max|).
// Zero maps to zero so that absent terms and neutral scores coincide, the
// sign is preserved, and the map is monotone.
inline double normalize_score(double raw, const Lexicon& lexicon) {
  const double m = lexicon.max_abs();
  if (!(m > 0.0)) {
    throw ConfigError("lexicon \"" + lexicon.name + "\" has an all-zero score range");
  }
  return raw * 0.995 / m;
}

// One slot per lexicon, in set order: the normalized score when the token is
// present, exactly 0 otherwise.
inline std::vector<float> lexicon_feature(std::string_view token, const LexiconSet& set) {
  std::vector<float> out(set.lexicons.size(), 0.0f);
  for (std::size_t k = 0; k < set.lexicons.size(); ++k) {
    if (const double* raw = set.lexicons[k].find(token)) {
      out[k] = static_cast<float>(normalize_score(*raw, set.lexicons[k]));
    }
  }
  return out;
}

// Bitmask of which lexicons contain the token (bit k = slot k), recorded as
// row provenance.
inline std::uint32_t lexicon_hits(std::string_view token, const LexiconSet& set) {
  std::uint32_t mask = 0;
  for (std::size_t k = 0; k < set.lexicons.size(); ++k) {
    if (set.lexicons[k].find(token) != nullptr) mask |= (1u << k);
  }
  return mask;
}

}  // namespace iwv
