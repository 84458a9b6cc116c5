#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "iwv/compose.hpp"
#include "iwv/errors.hpp"
#include "iwv/nn.hpp"
#include "iwv/rng.hpp"
#include "iwv/strings.hpp"

namespace iwv {

struct LabeledCorpus {
  std::string name;
  std::vector<Sentence> sentences;  // labels in {0, 1}
  // (train ids, test ids); present for corpora that ship a fixed split.
  std::optional<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> predefined_split;
};

namespace harness_detail {

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);
  std::vector<std::string> out;
  for (std::string_view line : split(bytes, '\n')) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
  }
  if (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline void append_line_corpus(LabeledCorpus& corpus, const std::filesystem::path& path,
                               int label) {
  for (const std::string& line : read_lines(path)) {
    Sentence s;
    s.tokens = tokenize(line);
    s.label = label;
    if (!s.tokens.empty()) corpus.sentences.push_back(std::move(s));
  }
}

inline std::filesystem::path find_single(const std::filesystem::path& dir,
                                         std::string_view extension) {
  std::vector<std::filesystem::path> hits;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.is_regular_file() && entry.path().extension() == extension) {
      hits.push_back(entry.path());
    }
  }
  if (ec) throw IoError("cannot list directory: " + dir.string());
  if (hits.size() != 1) {
    throw IoError("expected exactly one *" + std::string(extension) + " file under " +
                  dir.string() + ", found " + std::to_string(hits.size()));
  }
  return hits.front();
}

inline std::vector<std::size_t> append_tsv_corpus(LabeledCorpus& corpus,
                                                  const std::filesystem::path& path) {
  std::vector<std::size_t> ids;
  std::size_t line_no = 0;
  for (const std::string& line : read_lines(path)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("expected \"label<TAB>sentence\" in " + path.string(), line_no);
    }
    const std::string_view label_field = trim(std::string_view(line).substr(0, tab));
    int label;
    if (label_field == "0") {
      label = 0;
    } else if (label_field == "1") {
      label = 1;
    } else {
      throw ParseError("label must be 0 or 1 in " + path.string(), line_no);
    }
    Sentence s;
    s.tokens = tokenize(std::string_view(line).substr(tab + 1));
    s.label = label;
    if (s.tokens.empty()) continue;
    ids.push_back(corpus.sentences.size());
    corpus.sentences.push_back(std::move(s));
  }
  return ids;
}

}  // namespace harness_detail

// Dataset layouts:
//   mr, cr — a directory containing exactly one *.pos and one *.neg file,
//            one review per line (positive file first, so ids are stable);
//   sst    — a directory containing train.tsv and test.tsv, each line
//            "label<TAB>sentence" with binary labels; the file split is kept
//            as the corpus' predefined train/test split.
inline LabeledCorpus load_dataset(const std::string& name, const std::filesystem::path& path) {
  const std::string key = ascii_lower(name);
  LabeledCorpus corpus;
  corpus.name = key;
  if (key == "mr" || key == "cr") {
    const auto pos = harness_detail::find_single(path, ".pos");
    const auto neg = harness_detail::find_single(path, ".neg");
    harness_detail::append_line_corpus(corpus, pos, 1);
    harness_detail::append_line_corpus(corpus, neg, 0);
  } else if (key == "sst") {
    const auto train_ids = harness_detail::append_tsv_corpus(corpus, path / "train.tsv");
    const auto test_ids = harness_detail::append_tsv_corpus(corpus, path / "test.tsv");
    corpus.predefined_split = {train_ids, test_ids};
  } else {
    throw ConfigError("unknown dataset name: " + name);
  }
  if (corpus.sentences.empty()) throw DataError("dataset \"" + name + "\" is empty");
  return corpus;
}

// Random stratified partition: sentence id -> fold id.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;
  std::uint64_t seed = 0;

  std::vector<std::size_t> fold_ids(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] == fold) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> rest_ids(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
      if (assignments[i] != fold) out.push_back(i);
    }
    return out;
  }
};

// Shuffles each label class independently, then deals per-class quotas into
// folds. The +1 remainders rotate across classes so total fold sizes differ
// by at most one, and per-fold class counts stay within one of perfect
// stratification.
inline FoldPlan make_folds(const LabeledCorpus& corpus, int k, std::uint64_t seed) {
  const std::size_t n = corpus.sentences.size();
  if (k < 1) throw ConfigError("make_folds: k must be positive");
  if (n < static_cast<std::size_t>(k)) {
    throw DataError("make_folds: corpus of " + std::to_string(n) + " is smaller than k = " +
                    std::to_string(k));
  }
  if (k == 1) {
    std::cerr << "iwv: warning: k = 1 makes the train and test sets identical\n";
  }

  std::map<int, std::vector<std::size_t>> by_label;
  for (std::size_t i = 0; i < n; ++i) by_label[corpus.sentences[i].label].push_back(i);

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n, -1);
  std::size_t extra_offset = 0;
  for (auto& [label, ids] : by_label) {
    SplitMix64 rng = keyed_stream(seed, "fold-shuffle", static_cast<std::uint64_t>(label));
    deterministic_shuffle(ids, rng);
    const std::size_t base = ids.size() / static_cast<std::size_t>(k);
    const std::size_t rem = ids.size() % static_cast<std::size_t>(k);
    std::size_t cursor = 0;
    for (int f = 0; f < k; ++f) {
      std::size_t quota = base;
      // fold f takes one extra item when it falls in this class' remainder
      // window [extra_offset, extra_offset + rem) mod k
      const std::size_t rel =
          (static_cast<std::size_t>(f) + static_cast<std::size_t>(k) - extra_offset % k) %
          static_cast<std::size_t>(k);
      if (rel < rem) ++quota;
      for (std::size_t j = 0; j < quota; ++j) plan.assignments[ids[cursor++]] = f;
    }
    extra_offset += rem;
  }
  return plan;
}

// One method's evaluation: per-run per-fold accuracies plus their mean.
struct EvalReport {
  std::string method;
  std::string dataset;
  int feature_dim = 0;
  int runs = 0;
  std::vector<std::vector<double>> fold_accuracies;  // [run][fold]
  double mean_accuracy = 0.0;

  double recompute_mean() const {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& run : fold_accuracies) {
      for (double a : run) {
        sum += a;
        ++count;
      }
    }
    return count == 0 ? 0.0 : sum / static_cast<double>(count);
  }
};

namespace harness_detail {

template <typename Fn>
auto with_context(const std::string& ctx, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(ctx + ": " + e.what());
  } catch (const ParseError& e) {
    throw ParseError(ctx + ": " + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + ": " + e.what());
  } catch (const IoError& e) {
    throw IoError(ctx + ": " + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(ctx + ": " + e.what());
  } catch (const NumericsError& e) {
    throw NumericsError(ctx + ": " + e.what());
  }
}

inline std::vector<IwvMatrix> gather_matrices(const std::vector<IwvMatrix>& all,
                                              const std::vector<std::size_t>& ids) {
  std::vector<IwvMatrix> out;
  out.reserve(ids.size());
  for (std::size_t id : ids) out.push_back(all[id]);
  return out;
}

inline double train_and_score(const std::vector<IwvMatrix>& features,
                              const std::vector<std::size_t>& train_ids,
                              const std::vector<std::size_t>& test_ids, const CnnConfig& base_cfg,
                              std::uint64_t model_seed, bool allow_overlap = false) {
  if (!allow_overlap) {
    std::set<std::size_t> train_set(train_ids.begin(), train_ids.end());
    for (std::size_t id : test_ids) {
      if (train_set.count(id)) {
        throw DataError("train/test leakage: sentence in both splits", id);
      }
    }
  }

  std::size_t max_len = 0;
  for (std::size_t id : train_ids) max_len = std::max(max_len, features[id].row_count());
  // the training split fixes the padding length, floored at the widest filter
  max_len = std::max(max_len, static_cast<std::size_t>(base_cfg.max_filter_width()));

  const PaddedBatch train_batch = make_batch(gather_matrices(features, train_ids), max_len);
  const PaddedBatch test_batch = make_batch(gather_matrices(features, test_ids), max_len);

  CnnConfig cfg = base_cfg;
  cfg.input_dim = static_cast<int>(features.front().dim);
  cfg.seed = model_seed;

  CnnModel model = init_model(cfg);
  auto [trained, history] = train(std::move(model), train_batch, cfg);
  (void)history;

  const auto preds = predict(trained, test_batch);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test_batch.size(); ++i) {
    if (preds[i] == test_batch.labels[i]) ++correct;
  }
  return test_batch.size() == 0 ? 0.0
                                : static_cast<double>(correct) / static_cast<double>(test_batch.size());
}

}  // namespace harness_detail

// The evaluation protocol: features are built once per method, then for each
// run either a fresh k-fold partition (train on k-1 folds, test on the rest)
// or, when the corpus has a predefined split, one train/test round. Fold
// partitions depend only on (seed, run), so methods evaluated with the same
// seed share folds and their accuracy deltas are paired.
inline EvalReport run_experiment(const LabeledCorpus& corpus, const FeatureStores& stores,
                                 const FeatureConfig& feature_config, const CnnConfig& cnn_config,
                                 int runs, int k = 10, std::uint64_t seed = 42) {
  if (runs < 1) throw ConfigError("run_experiment: runs must be positive");
  if (corpus.sentences.empty()) throw DataError("run_experiment: empty corpus");

  const std::uint64_t oov_seed = keyed_stream(seed, "oov-features").next_u64();
  std::vector<IwvMatrix> features;
  features.reserve(corpus.sentences.size());
  for (std::size_t i = 0; i < corpus.sentences.size(); ++i) {
    harness_detail::with_context("sentence " + std::to_string(i), [&] {
      features.push_back(build_feature_matrix(corpus.sentences[i], stores, feature_config, oov_seed));
    });
  }

  EvalReport report;
  report.method = feature_config.label;
  report.dataset = corpus.name;
  report.feature_dim = static_cast<int>(features.front().dim);
  report.runs = runs;

  for (int r = 0; r < runs; ++r) {
    std::vector<double> run_accs;
    if (corpus.predefined_split) {
      const auto& [train_ids, test_ids] = *corpus.predefined_split;
      const std::uint64_t model_seed =
          keyed_stream(cnn_config.seed, "model", static_cast<std::uint64_t>(r)).next_u64();
      const double acc = harness_detail::with_context(
          "run " + std::to_string(r) + " predefined split",
          [&] { return harness_detail::train_and_score(features, train_ids, test_ids, cnn_config,
                                                       model_seed); });
      run_accs.push_back(acc);
    } else {
      const std::uint64_t fold_seed =
          keyed_stream(seed, "folds", static_cast<std::uint64_t>(r)).next_u64();
      const FoldPlan plan = make_folds(corpus, k, fold_seed);
      for (int f = 0; f < k; ++f) {
        const auto test_ids = plan.fold_ids(f);
        // k = 1 is the documented degenerate case: train and test are the
        // whole corpus (make_folds already warned about it).
        const auto train_ids = k == 1 ? test_ids : plan.rest_ids(f);
        const std::uint64_t model_seed =
            keyed_stream(cnn_config.seed, "model", static_cast<std::uint64_t>(r),
                         static_cast<std::uint64_t>(f))
                .next_u64();
        const double acc = harness_detail::with_context(
            "run " + std::to_string(r) + " fold " + std::to_string(f),
            [&] { return harness_detail::train_and_score(features, train_ids, test_ids,
                                                         cnn_config, model_seed, k == 1); });
        run_accs.push_back(acc);
      }
    }
    report.fold_accuracies.push_back(std::move(run_accs));
  }
  report.mean_accuracy = report.recompute_mean();
  return report;
}

// Per-fold detail rows, used for archival and byte-level reproducibility
// checks.
inline std::string report_csv(const EvalReport& report) {
  std::string out = "method,dataset,dim,run,fold,accuracy\n";
  char buf[64];
  for (std::size_t r = 0; r < report.fold_accuracies.size(); ++r) {
    for (std::size_t f = 0; f < report.fold_accuracies[r].size(); ++f) {
      out += report.method;
      out += ',';
      out += report.dataset;
      out += ',';
      out += std::to_string(report.feature_dim);
      out += ',';
      out += std::to_string(r);
      out += ',';
      out += std::to_string(f);
      out += ',';
      std::snprintf(buf, sizeof(buf), "%.6f", report.fold_accuracies[r][f]);
      out += buf;
      out += '\n';
    }
  }
  return out;
}

struct ComparisonTable {
  std::string text;
  std::string csv;
};

// One row per method, one column per dataset, accuracies in percent to one
// decimal place.
inline ComparisonTable compare_methods(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ConfigError("compare_methods: no reports");

  std::vector<std::string> methods;
  std::vector<std::string> datasets;
  std::map<std::string, int> dims;
  std::map<std::pair<std::string, std::string>, double> cells;
  for (const auto& rep : reports) {
    if (std::find(methods.begin(), methods.end(), rep.method) == methods.end()) {
      methods.push_back(rep.method);
    }
    if (std::find(datasets.begin(), datasets.end(), rep.dataset) == datasets.end()) {
      datasets.push_back(rep.dataset);
    }
    auto [it, fresh] = dims.emplace(rep.method, rep.feature_dim);
    if (!fresh && it->second != rep.feature_dim) {
      throw ConfigError("compare_methods: method \"" + rep.method +
                        "\" reported with two different dimensions");
    }
    if (!cells.emplace(std::make_pair(rep.method, rep.dataset), rep.mean_accuracy).second) {
      throw ConfigError("compare_methods: duplicate report for method \"" + rep.method +
                        "\" on dataset \"" + rep.dataset + "\"");
    }
  }

  char buf[64];
  auto cell_text = [&](const std::string& method, const std::string& ds) -> std::string {
    auto it = cells.find({method, ds});
    if (it == cells.end()) return "-";
    std::snprintf(buf, sizeof(buf), "%.1f", it->second * 100.0);
    return buf;
  };

  std::size_t method_w = std::string("Method").size();
  for (const auto& m : methods) method_w = std::max(method_w, m.size());
  std::vector<std::size_t> col_w(datasets.size());
  for (std::size_t c = 0; c < datasets.size(); ++c) {
    col_w[c] = datasets[c].size();
    for (const auto& m : methods) col_w[c] = std::max(col_w[c], cell_text(m, datasets[c]).size());
  }

  auto pad = [](const std::string& s, std::size_t w) {
    std::string out = s;
    out.append(w > s.size() ? w - s.size() : 0, ' ');
    return out;
  };

  ComparisonTable table;
  table.text = pad("Method", method_w) + "  " + pad("Dim", 4);
  table.csv = "method,dim";
  for (std::size_t c = 0; c < datasets.size(); ++c) {
    table.text += "  " + pad(datasets[c], col_w[c]);
    table.csv += "," + datasets[c];
  }
  table.text += '\n';
  table.csv += '\n';
  for (const auto& m : methods) {
    table.text += pad(m, method_w) + "  " + pad(std::to_string(dims[m]), 4);
    table.csv += m + "," + std::to_string(dims[m]);
    for (std::size_t c = 0; c < datasets.size(); ++c) {
      const std::string cell = cell_text(m, datasets[c]);
      table.text += "  " + pad(cell, col_w[c]);
      table.csv += ",";
      table.csv += (cell == "-" ? "" : cell);
    }
    table.text += '\n';
    table.csv += '\n';
  }
  return table;
}

}  // namespace iwv
