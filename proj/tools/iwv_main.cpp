// Command-line front end: build feature caches, train taggers and
// classifiers, evaluate checkpoints, and run method comparisons.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "iwv/iwv.hpp"

namespace {

namespace fs = std::filesystem;

struct OwnedStores {
  std::optional<iwv::EmbeddingTable> w2v;
  std::optional<iwv::EmbeddingTable> glove;
  std::optional<iwv::TaggerModel> tagger;
  std::optional<iwv::PosCodebook> codebook;
  std::optional<iwv::LexiconSet> lexicons;

  iwv::FeatureStores view() const {
    iwv::FeatureStores s;
    s.w2v = w2v ? &*w2v : nullptr;
    s.glove = glove ? &*glove : nullptr;
    s.tagger = tagger ? &*tagger : nullptr;
    s.codebook = codebook ? &*codebook : nullptr;
    s.lexicons = lexicons ? &*lexicons : nullptr;
    return s;
  }
};

iwv::FeatureConfig method_config(const std::string& name) {
  const std::string key = iwv::ascii_lower(name);
  if (key == "iwv") return iwv::FeatureConfig::iwv();
  if (key == "w2v" || key == "word2vec") return iwv::FeatureConfig::w2v_only();
  if (key == "glove") return iwv::FeatureConfig::glove_only();
  throw iwv::ConfigError("unknown method \"" + name + "\" (expected iwv, w2v or glove)");
}

iwv::TagSet tagset_from(const iwv::KeyValueConfig& cfg) {
  if (!cfg.has("tagset")) return iwv::TagSet::penn_treebank();
  return iwv::TagSet::from_tags(cfg.get_list("tagset"));
}

iwv::LexiconSet load_lexicons(const iwv::KeyValueConfig& cfg) {
  const long long count = cfg.get_int("lexicon_count");
  if (count < 1) throw iwv::ConfigError("lexicon_count must be positive");
  iwv::LexiconSet set;
  for (long long i = 1; i <= count; ++i) {
    const std::string prefix = "lexicon_" + std::to_string(i) + "_";
    const std::string name = cfg.get_string(prefix + "name");
    std::vector<fs::path> paths;
    for (const auto& p : cfg.get_list(prefix + "paths")) paths.emplace_back(p);
    set.lexicons.push_back(iwv::load_lexicon(paths, name));
  }
  return set;
}

OwnedStores load_stores(const iwv::KeyValueConfig& cfg, bool need_w2v, bool need_glove,
                        bool need_pos, bool need_lex) {
  OwnedStores stores;
  if (need_w2v) stores.w2v = iwv::load_word2vec_binary(cfg.get_string("w2v_path"));
  if (need_glove) stores.glove = iwv::load_glove_text(cfg.get_string("glove_path"));
  if (need_pos) {
    stores.tagger = iwv::TaggerModel::load(cfg.get_string("tagger_path"));
    if (cfg.has("codebook_path")) {
      stores.codebook = iwv::PosCodebook::load(cfg.get_string("codebook_path"));
    } else {
      const auto dim = static_cast<std::size_t>(cfg.get_int("pos_dim", 50));
      const auto seed = cfg.get_u64("pos_seed", cfg.get_u64("seed", 42));
      stores.codebook = iwv::build_pos_codebook(stores.tagger->tagset(), dim, seed);
    }
  }
  if (need_lex) stores.lexicons = load_lexicons(cfg);
  return stores;
}

iwv::CnnConfig cnn_config_from(const iwv::KeyValueConfig& cfg) {
  iwv::CnnConfig c;
  if (cfg.has("filter_widths")) {
    c.filter_widths.clear();
    for (const auto& w : cfg.get_list("filter_widths")) {
      int width = 0;
      auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), width);
      if (ec != std::errc() || ptr != w.data() + w.size()) {
        throw iwv::ConfigError("filter_widths: not an integer: " + w);
      }
      c.filter_widths.push_back(width);
    }
  }
  c.feature_maps = static_cast<int>(cfg.get_int("feature_maps", c.feature_maps));
  c.dense_units = static_cast<int>(cfg.get_int("dense_units", c.dense_units));
  c.classes = static_cast<int>(cfg.get_int("classes", c.classes));
  c.dropout_rate = cfg.get_double("dropout", c.dropout_rate);
  c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
  c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
  c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
  c.seed = cfg.get_u64("cnn_seed", cfg.get_u64("seed", 42));
  return c;
}

int run_tag_train(const std::string& treebank, const std::string& out, int epochs,
                  std::uint64_t seed, const std::string& config_path) {
  iwv::TagSet tagset = iwv::TagSet::penn_treebank();
  if (!config_path.empty()) tagset = tagset_from(iwv::KeyValueConfig::parse_file(config_path));
  const auto corpus = iwv::read_tagged_corpus(treebank);
  const auto model = iwv::train_tagger(corpus, epochs, seed, tagset);
  model.save(out);

  std::size_t tokens = 0, correct = 0;
  for (const auto& sent : corpus) {
    const auto tags = model.tag(sent.tokens);
    for (std::size_t i = 0; i < tags.size(); ++i) {
      ++tokens;
      if (tags[i] == sent.tags[i]) ++correct;
    }
  }
  std::printf("trained tagger on %zu sentences (%zu features), training accuracy %.4f\n",
              corpus.size(), model.feature_count(),
              tokens == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(tokens));
  std::printf("model written to %s\n", out.c_str());
  return 0;
}

int run_build_vectors(const std::string& config_path, const std::string& dataset,
                      const std::string& data_path, const std::string& out,
                      const std::string& split, const std::string& method_override) {
  const auto cfg = iwv::KeyValueConfig::parse_file(config_path);
  const std::string method_name =
      method_override.empty() ? cfg.get_string("method", "iwv") : method_override;
  const iwv::FeatureConfig fc = method_config(method_name);

  const bool need_w2v = fc.base != iwv::BaseLookup::GloveOnly;
  const bool need_glove = fc.base != iwv::BaseLookup::W2vOnly;
  const OwnedStores stores =
      load_stores(cfg, need_w2v, need_glove, fc.include_pos, fc.include_lex);

  const iwv::LabeledCorpus corpus = iwv::load_dataset(dataset, data_path);
  std::vector<std::size_t> ids;
  if (split == "all") {
    ids.resize(corpus.sentences.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  } else if (split == "train" || split == "test") {
    if (!corpus.predefined_split) {
      throw iwv::ConfigError("dataset \"" + dataset + "\" has no predefined train/test split");
    }
    ids = split == "train" ? corpus.predefined_split->first : corpus.predefined_split->second;
  } else {
    throw iwv::ConfigError("unknown split \"" + split + "\" (expected all, train or test)");
  }

  const std::uint64_t seed = cfg.get_u64("seed", 42);
  const std::uint64_t oov_seed = iwv::keyed_stream(seed, "oov-features").next_u64();
  std::vector<iwv::IwvMatrix> matrices;
  matrices.reserve(ids.size());
  std::size_t max_len = 1;
  for (std::size_t id : ids) {
    matrices.push_back(
        iwv::build_feature_matrix(corpus.sentences[id], stores.view(), fc, oov_seed));
    max_len = std::max(max_len, matrices.back().row_count());
  }
  const iwv::CnnConfig cnn = cnn_config_from(cfg);
  max_len = std::max(max_len, static_cast<std::size_t>(cnn.max_filter_width()));

  const iwv::PaddedBatch batch = iwv::make_batch(matrices, max_len);
  iwv::save_feature_cache(batch, out);
  std::printf("cached %zu sentences (max_len %zu, dim %zu, method %s) to %s\n", batch.size(),
              batch.max_len, batch.dim, fc.label.c_str(), out.c_str());
  return 0;
}

int run_train(const std::string& vectors, const std::string& out, const std::string& config_path) {
  iwv::KeyValueConfig cfg;
  if (!config_path.empty()) cfg = iwv::KeyValueConfig::parse_file(config_path);
  const iwv::PaddedBatch data = iwv::load_feature_cache(vectors);
  if (data.size() == 0) throw iwv::DataError("feature cache is empty");

  iwv::CnnConfig c = cnn_config_from(cfg);
  c.input_dim = static_cast<int>(data.dim);
  auto [model, history] = iwv::train(iwv::init_model(c), data, c);
  iwv::save_checkpoint(model, out);

  const std::size_t epochs_run = history.loss.size();
  std::printf("trained %zu epochs%s, final loss %.6f, training accuracy %.4f\n", epochs_run,
              history.early_stopped ? " (early stop)" : "", history.loss.back(),
              history.accuracy.back());
  std::printf("checkpoint written to %s\n", out.c_str());
  return 0;
}

int run_evaluate(const std::string& vectors, const std::string& model_path) {
  const iwv::PaddedBatch data = iwv::load_feature_cache(vectors);
  const iwv::CnnModel model = iwv::load_checkpoint(model_path);
  const auto preds = iwv::predict(model, data);
  std::size_t correct = 0, labeled = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.labels[i] < 0) continue;
    ++labeled;
    if (preds[i] == data.labels[i]) ++correct;
  }
  if (labeled == 0) throw iwv::DataError("feature cache has no labeled sentences");
  std::printf("accuracy %.4f (%zu/%zu)\n",
              static_cast<double>(correct) / static_cast<double>(labeled), correct, labeled);
  return 0;
}

int run_compare(const std::string& config_path) {
  const auto cfg = iwv::KeyValueConfig::parse_file(config_path);

  std::vector<iwv::FeatureConfig> methods;
  for (const auto& name : cfg.get_list("methods")) methods.push_back(method_config(name));
  if (methods.empty()) throw iwv::ConfigError("methods list is empty");

  bool need_w2v = false, need_glove = false, need_pos = false, need_lex = false;
  for (const auto& fc : methods) {
    need_w2v |= fc.base != iwv::BaseLookup::GloveOnly;
    need_glove |= fc.base != iwv::BaseLookup::W2vOnly;
    need_pos |= fc.include_pos;
    need_lex |= fc.include_lex;
  }
  const OwnedStores stores = load_stores(cfg, need_w2v, need_glove, need_pos, need_lex);

  const long long dataset_count = cfg.get_int("dataset_count");
  if (dataset_count < 1) throw iwv::ConfigError("dataset_count must be positive");
  const int runs = static_cast<int>(cfg.get_int("runs", 3));
  const int folds = static_cast<int>(cfg.get_int("folds", 10));
  const std::uint64_t seed = cfg.get_u64("seed", 42);
  const iwv::CnnConfig cnn = cnn_config_from(cfg);

  std::vector<iwv::EvalReport> reports;
  std::string detail_csv = "method,dataset,dim,run,fold,accuracy\n";
  for (long long d = 1; d <= dataset_count; ++d) {
    const std::string prefix = "dataset_" + std::to_string(d) + "_";
    const auto corpus =
        iwv::load_dataset(cfg.get_string(prefix + "name"), cfg.get_string(prefix + "path"));
    for (const auto& fc : methods) {
      std::fprintf(stderr, "iwv: evaluating %s on %s...\n", fc.label.c_str(),
                   corpus.name.c_str());
      reports.push_back(
          iwv::run_experiment(corpus, stores.view(), fc, cnn, runs, folds, seed));
      const std::string detail = iwv::report_csv(reports.back());
      detail_csv += detail.substr(detail.find('\n') + 1);  // drop the repeated header
    }
  }

  const iwv::ComparisonTable table = iwv::compare_methods(reports);
  std::fputs(table.text.c_str(), stdout);

  const std::string csv_path = cfg.get_string("report_csv", "report.csv");
  iwv::write_file_bytes(csv_path, table.csv);
  const std::string detail_path = cfg.get_string("report_detail_csv", "report_detail.csv");
  iwv::write_file_bytes(detail_path, detail_csv);
  std::fprintf(stderr, "iwv: wrote %s and %s\n", csv_path.c_str(), detail_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"improved word vectors: feature construction and CNN evaluation"};
  app.require_subcommand(1);

  auto* tag_train = app.add_subcommand("tag-train", "train a POS tagger from a tagged corpus");
  std::string tt_treebank, tt_out, tt_config;
  int tt_epochs = 5;
  std::uint64_t tt_seed = 42;
  tag_train->add_option("--treebank", tt_treebank, "CoNLL-style token<TAB>tag corpus")->required();
  tag_train->add_option("--out", tt_out, "output model path")->required();
  tag_train->add_option("--epochs", tt_epochs, "training epochs");
  tag_train->add_option("--seed", tt_seed, "shuffle seed");
  tag_train->add_option("--config", tt_config, "config file (for a tagset override)");

  auto* build = app.add_subcommand("build-vectors", "build and cache feature matrices");
  std::string bv_config, bv_dataset, bv_data, bv_out, bv_split = "all", bv_method;
  build->add_option("--config", bv_config, "config file with store paths")->required();
  build->add_option("--dataset", bv_dataset, "dataset name: mr, cr or sst")->required();
  build->add_option("--data", bv_data, "dataset directory")->required();
  build->add_option("--out", bv_out, "output cache path")->required();
  build->add_option("--split", bv_split, "all, train or test");
  build->add_option("--method", bv_method, "iwv, w2v or glove (overrides config)");

  auto* train_cmd = app.add_subcommand("train", "train the classifier on a feature cache");
  std::string tr_vectors, tr_out, tr_config;
  train_cmd->add_option("--vectors", tr_vectors, "feature cache from build-vectors")->required();
  train_cmd->add_option("--out", tr_out, "output checkpoint path")->required();
  train_cmd->add_option("--config", tr_config, "config file with hyperparameters");

  auto* eval_cmd = app.add_subcommand("evaluate", "score a checkpoint on a feature cache");
  std::string ev_vectors, ev_model;
  eval_cmd->add_option("--vectors", ev_vectors, "feature cache")->required();
  eval_cmd->add_option("--model", ev_model, "checkpoint from train")->required();

  auto* compare_cmd = app.add_subcommand("compare", "run the cross-validated method comparison");
  std::string cp_config;
  compare_cmd->add_option("--config", cp_config, "experiment config file")->required();

  try {
    app.parse(argc, argv);
    if (tag_train->parsed()) {
      return run_tag_train(tt_treebank, tt_out, tt_epochs, tt_seed, tt_config);
    }
    if (build->parsed()) {
      return run_build_vectors(bv_config, bv_dataset, bv_data, bv_out, bv_split, bv_method);
    }
    if (train_cmd->parsed()) return run_train(tr_vectors, tr_out, tr_config);
    if (eval_cmd->parsed()) return run_evaluate(ev_vectors, ev_model);
    if (compare_cmd->parsed()) return run_compare(cp_config);
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  } catch (const iwv::ConfigError& e) {
    std::fprintf(stderr, "iwv: config error: %s\n", e.what());
    return 2;
  } catch (const iwv::ShapeError& e) {
    std::fprintf(stderr, "iwv: shape error: %s\n", e.what());
    return 2;
  } catch (const iwv::NumericsError& e) {
    std::fprintf(stderr, "iwv: numerics error: %s\n", e.what());
    return 4;
  } catch (const iwv::Error& e) {
    std::fprintf(stderr, "iwv: error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "iwv: unexpected error: %s\n", e.what());
    return 1;
  }
}
