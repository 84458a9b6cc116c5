#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include "iwv/nn.hpp"
#include "support.hpp"

using namespace iwv;
using testsup::TempDir;

namespace {

PaddedBatch random_batch(const std::vector<std::uint32_t>& lengths, std::size_t max_len,
                         std::size_t dim, const std::vector<int>& labels, std::uint64_t seed) {
  PaddedBatch b;
  b.max_len = max_len;
  b.dim = dim;
  b.lengths = lengths;
  b.labels = labels;
  b.tensor.assign(lengths.size() * max_len * dim, 0.0f);
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    for (std::size_t t = 0; t < lengths[i]; ++t) {
      float* row = b.tensor.data() + (i * max_len + t) * dim;
      for (std::size_t d = 0; d < dim; ++d) {
        row[d] = static_cast<float>(rng.next_uniform(-1.0, 1.0));
      }
    }
  }
  return b;
}

CnnConfig toy_config() {
  CnnConfig cfg;
  cfg.filter_widths = {3, 4, 5};
  cfg.feature_maps = 5;
  cfg.dense_units = 7;
  cfg.input_dim = 8;
  cfg.classes = 2;
  cfg.dropout_rate = 0.0;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 2;
  cfg.epochs = 1;
  cfg.seed = 1234;
  return cfg;
}

// Central finite differences over every parameter; the independent oracle
// for the analytic gradients.
std::vector<double> numeric_grad(CnnModel& model, const PaddedBatch& batch, double eps) {
  std::vector<double> out(model.param_count());
  for (std::size_t j = 0; j < model.param_count(); ++j) {
    const double saved = model.params()[j];
    model.params()[j] = saved + eps;
    const double up = loss_and_grad(model, batch).loss;
    model.params()[j] = saved - eps;
    const double down = loss_and_grad(model, batch).loss;
    model.params()[j] = saved;
    out[j] = (up - down) / (2.0 * eps);
  }
  return out;
}

}  // namespace

TEST_CASE("parameter tensors have the configured shapes") {
  CnnConfig cfg;  // default config: 3/4/5 filters, 100 maps, 95 dense
  const CnnModel model = init_model(cfg);

  REQUIRE(model.tensors().size() == 10);
  CHECK(model.tensors()[0].name == "conv1.weight");
  CHECK(model.tensors()[0].count == 3u * 356u * 100u);
  CHECK(model.tensors()[2].name == "conv2.weight");
  CHECK(model.tensors()[2].count == 4u * 356u * 100u);
  CHECK(model.tensors()[4].name == "conv3.weight");
  CHECK(model.tensors()[4].count == 5u * 356u * 100u);
  CHECK(model.tensors()[6].name == "dense.weight");
  CHECK(model.tensors()[6].count == 300u * 95u);  // 3 banks x 100 maps -> 95
  CHECK(model.tensors()[8].name == "output.weight");
  CHECK(model.tensors()[8].count == 95u * 2u);

  // biases start at zero
  const double* b1 = model.conv_b(0);
  for (int i = 0; i < 100; ++i) CHECK(b1[i] == 0.0);
}

TEST_CASE("initialization is deterministic in the seed") {
  const CnnConfig cfg = toy_config();
  const CnnModel a = init_model(cfg);
  const CnnModel b = init_model(cfg);
  CHECK(a.params() == b.params());

  CnnConfig other = cfg;
  other.seed = 999;
  CHECK(init_model(other).params() != a.params());
}

TEST_CASE("invalid configs are rejected") {
  CnnConfig cfg = toy_config();
  cfg.feature_maps = 0;
  CHECK_THROWS_AS(init_model(cfg), ConfigError);
  cfg = toy_config();
  cfg.dropout_rate = 1.0;
  CHECK_THROWS_AS(init_model(cfg), ConfigError);
  cfg = toy_config();
  cfg.filter_widths.clear();
  CHECK_THROWS_AS(init_model(cfg), ConfigError);
}

TEST_CASE("forward with all-zero parameters is exactly uniform") {
  const CnnConfig cfg = toy_config();
  const CnnModel model{cfg};  // zero params
  const PaddedBatch batch = random_batch({10}, 10, 8, {0}, 5);
  const auto probs = forward(model, batch, false);
  REQUIRE(probs.size() == 2);
  CHECK(probs[0] == 0.5);
  CHECK(probs[1] == 0.5);
}

TEST_CASE("probability rows sum to one") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  const PaddedBatch batch = random_batch({10, 7, 5, 3}, 10, 8, {0, 1, 0, 1}, 6);
  const auto probs = forward(model, batch, false);
  for (std::size_t i = 0; i < 4; ++i) {
    const double sum = probs[2 * i] + probs[2 * i + 1];
    CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-6));
  }
}

TEST_CASE("outputs are invariant to extra zero padding") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  const PaddedBatch tight = random_batch({7}, 7, 8, {1}, 7);

  PaddedBatch padded;
  padded.max_len = 13;
  padded.dim = 8;
  padded.lengths = {7};
  padded.labels = {1};
  padded.tensor.assign(13 * 8, 0.0f);
  std::copy(tight.tensor.begin(), tight.tensor.end(), padded.tensor.begin());

  const auto a = forward(model, tight, false);
  const auto b = forward(model, padded, false);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK_THAT(a[i], Catch::Matchers::WithinAbs(b[i], 1e-12));
  }
}

TEST_CASE("sentences shorter than a filter width still classify") {
  const CnnConfig cfg = toy_config();  // widths up to 5
  const CnnModel model = init_model(cfg);
  const PaddedBatch batch = random_batch({2}, 10, 8, {0}, 8);  // 2 tokens, no valid window anywhere
  const auto probs = forward(model, batch, false);
  CHECK_THAT(probs[0] + probs[1], Catch::Matchers::WithinAbs(1.0, 1e-6));
  CHECK(std::isfinite(probs[0]));
}

TEST_CASE("batch shape errors") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  SECTION("max_len below the largest filter width") {
    const PaddedBatch batch = random_batch({4}, 4, 8, {0}, 9);
    CHECK_THROWS_AS(forward(model, batch, false), ShapeError);
  }
  SECTION("wrong feature dimension") {
    const PaddedBatch batch = random_batch({10}, 10, 9, {0}, 9);
    CHECK_THROWS_AS(forward(model, batch, false), ShapeError);
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  const CnnConfig cfg = toy_config();
  CnnModel model = init_model(cfg);
  const PaddedBatch batch = random_batch({10, 7}, 10, 8, {0, 1}, 11);

  const LossGrad lg = loss_and_grad(model, batch);
  REQUIRE(lg.grad.size() == model.param_count());
  const auto numeric = numeric_grad(model, batch, 1e-5);

  double max_rel = 0.0;
  for (std::size_t j = 0; j < lg.grad.size(); ++j) {
    const double a = lg.grad[j];
    const double n = numeric[j];
    const double rel = std::fabs(a - n) / std::max({std::fabs(a), std::fabs(n), 1e-4});
    max_rel = std::max(max_rel, rel);
  }
  INFO("max relative error " << max_rel);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("loss approaches zero for confident correct predictions") {
  const CnnConfig cfg = toy_config();
  CnnModel model{cfg};  // zero params
  // push the output bias hard toward class 0
  model.params()[model.out_b_off()] = 50.0;
  const PaddedBatch batch = random_batch({10, 8}, 10, 8, {0, 0}, 13);
  const LossGrad lg = loss_and_grad(model, batch);
  CHECK(lg.loss < 1e-6);
}

TEST_CASE("duplicating every batch item leaves the mean loss unchanged") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  const PaddedBatch once = random_batch({10, 7}, 10, 8, {0, 1}, 14);

  PaddedBatch twice;
  twice.max_len = once.max_len;
  twice.dim = once.dim;
  for (int rep = 0; rep < 2; ++rep) {
    twice.tensor.insert(twice.tensor.end(), once.tensor.begin(), once.tensor.end());
    twice.lengths.insert(twice.lengths.end(), once.lengths.begin(), once.lengths.end());
    twice.labels.insert(twice.labels.end(), once.labels.begin(), once.labels.end());
  }
  const double a = loss_and_grad(model, once).loss;
  const double b = loss_and_grad(model, twice).loss;
  CHECK_THAT(a, Catch::Matchers::WithinAbs(b, 1e-12));
}

TEST_CASE("missing labels are a data error") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  const PaddedBatch batch = random_batch({10}, 10, 8, {-1}, 15);
  CHECK_THROWS_AS(loss_and_grad(model, batch), DataError);
}

TEST_CASE("dropout draws from the provided stream") {
  CnnConfig cfg = toy_config();
  cfg.dropout_rate = 0.5;
  const CnnModel model = init_model(cfg);
  const PaddedBatch batch = random_batch({10}, 10, 8, {0}, 16);

  SplitMix64 s1 = keyed_stream(1, "dropout");
  SplitMix64 s2 = keyed_stream(1, "dropout");
  const double l1 = loss_and_grad(model, batch, &s1).loss;
  const double l2 = loss_and_grad(model, batch, &s2).loss;
  CHECK(l1 == l2);  // same stream state, same masks

  CHECK_THROWS_AS(forward(model, batch, true, nullptr), ConfigError);
  CHECK_NOTHROW(forward(model, batch, false, nullptr));
}

namespace {

// 20 sentences whose first row carries the label signal in dimension 0.
PaddedBatch overfit_corpus(std::size_t dim) {
  std::vector<std::uint32_t> lengths;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    lengths.push_back(5 + (i % 5));
    labels.push_back(i % 2);
  }
  PaddedBatch b = random_batch(lengths, 10, dim, labels, 17);
  for (std::size_t i = 0; i < b.size(); ++i) {
    float* row = b.tensor.data() + i * b.max_len * b.dim;
    row[0] = b.labels[i] == 1 ? 1.5f : -1.5f;
  }
  return b;
}

}  // namespace

TEST_CASE("training overfits a 20-sentence corpus to 100% accuracy") {
  CnnConfig cfg;
  cfg.filter_widths = {3, 4, 5};
  cfg.feature_maps = 8;
  cfg.dense_units = 12;
  cfg.input_dim = 12;
  cfg.classes = 2;
  cfg.dropout_rate = 0.0;
  cfg.learning_rate = 0.01;
  cfg.batch_size = 10;
  cfg.epochs = 200;
  cfg.seed = 21;

  const PaddedBatch data = overfit_corpus(12);
  auto [model, history] = train(init_model(cfg), data, cfg);
  REQUIRE(!history.accuracy.empty());
  const double best = *std::max_element(history.accuracy.begin(), history.accuracy.end());
  CHECK(best == 1.0);
  CHECK(history.loss.size() <= 200);
  for (double l : history.loss) CHECK(std::isfinite(l));
}

TEST_CASE("training is deterministic for a fixed seed") {
  CnnConfig cfg = toy_config();
  cfg.epochs = 5;
  cfg.dropout_rate = 0.3;
  const PaddedBatch data = random_batch({10, 7, 9, 6, 10, 8}, 10, 8, {0, 1, 1, 0, 1, 0}, 18);

  auto [m1, h1] = train(init_model(cfg), data, cfg);
  auto [m2, h2] = train(init_model(cfg), data, cfg);
  CHECK(h1.loss == h2.loss);
  CHECK(h1.accuracy == h2.accuracy);
  CHECK(m1.params() == m2.params());
  CHECK(h1.final_params_id == h2.final_params_id);
}

TEST_CASE("zero learning rate leaves parameters unchanged") {
  CnnConfig cfg = toy_config();
  cfg.learning_rate = 0.0;
  cfg.epochs = 1;
  const PaddedBatch data = random_batch({10, 7}, 10, 8, {0, 1}, 19);
  const CnnModel before = init_model(cfg);
  auto [after, history] = train(CnnModel(before), data, cfg);
  CHECK(after.params() == before.params());
}

TEST_CASE("non-finite loss raises NumericsError with the offending epoch") {
  CnnConfig cfg = toy_config();
  const PaddedBatch data = random_batch({10, 7}, 10, 8, {0, 1}, 25);
  CnnModel model = init_model(cfg);
  model.params()[0] = std::numeric_limits<double>::quiet_NaN();
  try {
    train(std::move(model), data, cfg);
    FAIL("expected NumericsError");
  } catch (const NumericsError& e) {
    REQUIRE(e.epoch().has_value());
    CHECK(*e.epoch() == 0);
  }
}

TEST_CASE("empty training data is a data error") {
  const CnnConfig cfg = toy_config();
  PaddedBatch data;
  data.max_len = 10;
  data.dim = 8;
  CHECK_THROWS_AS(train(init_model(cfg), data, cfg), DataError);
}

TEST_CASE("predict takes the argmax with ties toward class 0") {
  const CnnConfig cfg = toy_config();

  SECTION("clear winner") {
    CnnModel model{cfg};
    model.params()[model.out_b_off()] = 2.1972246;  // probs ~ [0.9, 0.1]
    const PaddedBatch batch = random_batch({10}, 10, 8, {1}, 20);
    CHECK(predict(model, batch) == std::vector<int>{0});
    model.params()[model.out_b_off()] = 0.0;
    model.params()[model.out_b_off() + 1] = 2.1972246;
    CHECK(predict(model, batch) == std::vector<int>{1});
  }
  SECTION("exact tie goes to the lower class id") {
    const CnnModel model{cfg};  // zero params, probs exactly [0.5, 0.5]
    const PaddedBatch batch = random_batch({10}, 10, 8, {1}, 21);
    CHECK(predict(model, batch) == std::vector<int>{0});
  }
}

TEST_CASE("predict is invariant to batch order") {
  const CnnConfig cfg = toy_config();
  const CnnModel model = init_model(cfg);
  const PaddedBatch data = random_batch({10, 7, 9, 6, 10, 8}, 10, 8, {0, 1, 1, 0, 1, 0}, 22);
  const auto base = predict(model, data);

  const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
  PaddedBatch shuffled;
  shuffled.max_len = data.max_len;
  shuffled.dim = data.dim;
  for (std::size_t i : perm) {
    shuffled.tensor.insert(shuffled.tensor.end(), data.item(i),
                           data.item(i) + data.max_len * data.dim);
    shuffled.lengths.push_back(data.lengths[i]);
    shuffled.labels.push_back(data.labels[i]);
  }
  const auto moved = predict(model, shuffled);
  for (std::size_t i = 0; i < perm.size(); ++i) REQUIRE(moved[i] == base[perm[i]]);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  CnnConfig cfg = toy_config();
  cfg.dropout_rate = 0.4;
  const CnnModel model = init_model(cfg);
  const auto path = dir.file("model.ckpt");
  save_checkpoint(model, path);
  const CnnModel back = load_checkpoint(path);

  REQUIRE(back.config().same_shape(cfg));
  CHECK(back.config().dropout_rate == cfg.dropout_rate);
  CHECK(back.config().seed == cfg.seed);
  REQUIRE(back.param_count() == model.param_count());
  for (std::size_t j = 0; j < model.param_count(); ++j) {
    // parameters survive the float32 export exactly once rounded
    REQUIRE(back.params()[j] == static_cast<double>(static_cast<float>(model.params()[j])));
  }

  // behavior matches after reload
  const PaddedBatch batch = random_batch({10, 6}, 10, 8, {0, 1}, 23);
  CHECK(predict(back, batch) == predict(model, batch));
}

TEST_CASE("checkpoint loader rejects foreign files and versions") {
  TempDir dir;
  const auto path = dir.file("bad.ckpt");
  SECTION("wrong magic") {
    write_file_bytes(path, "NOTIT\x01\x00\x00\x00 garbage");
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  }
  SECTION("wrong version") {
    const CnnModel model = init_model(toy_config());
    const auto good = dir.file("good.ckpt");
    save_checkpoint(model, good);
    std::string bytes = read_file_bytes(good);
    bytes[5] = 9;  // version field
    write_file_bytes(path, bytes);
    CHECK_THROWS_AS(load_checkpoint(path), ParseError);
  }
}
