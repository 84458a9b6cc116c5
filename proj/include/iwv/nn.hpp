#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "iwv/compose.hpp"
#include "iwv/errors.hpp"
#include "iwv/io.hpp"
#include "iwv/rng.hpp"

namespace iwv {

// Architecture and training hyperparameters of the sentence classifier:
// parallel 1-D convolution banks over the token axis, max-over-time pooling,
// one ReLU dense layer, softmax output.
struct CnnConfig {
  std::vector<int> filter_widths{3, 4, 5};
  int feature_maps = 100;
  int dense_units = 95;
  int input_dim = 356;
  int classes = 2;
  double dropout_rate = 0.5;
  double learning_rate = 1e-3;
  int batch_size = 50;
  int epochs = 25;
  std::uint64_t seed = 42;

  int max_filter_width() const {
    int m = 0;
    for (int w : filter_widths) m = std::max(m, w);
    return m;
  }

  void validate() const {
    if (filter_widths.empty()) throw ConfigError("cnn config: no filter widths");
    for (int w : filter_widths) {
      if (w < 1) throw ConfigError("cnn config: filter width must be positive");
    }
    if (feature_maps < 1) throw ConfigError("cnn config: feature_maps must be positive");
    if (dense_units < 1) throw ConfigError("cnn config: dense_units must be positive");
    if (input_dim < 1) throw ConfigError("cnn config: input_dim must be positive");
    if (classes < 2) throw ConfigError("cnn config: classes must be at least 2");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
      throw ConfigError("cnn config: dropout_rate must be in [0, 1)");
    }
    if (!(learning_rate >= 0.0)) throw ConfigError("cnn config: learning_rate must be >= 0");
    if (batch_size < 1) throw ConfigError("cnn config: batch_size must be positive");
    if (epochs < 1) throw ConfigError("cnn config: epochs must be positive");
  }

  bool same_shape(const CnnConfig& o) const {
    return filter_widths == o.filter_widths && feature_maps == o.feature_maps &&
           dense_units == o.dense_units && input_dim == o.input_dim && classes == o.classes;
  }
};

// All parameters live in one flat double buffer with a named-tensor layout on
// top; training, gradient checking and checkpointing all walk the same
// buffer.
class CnnModel {
 public:
  struct Tensor {
    std::string name;
    std::size_t offset;
    std::size_t count;
  };

  explicit CnnModel(CnnConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    const std::size_t d = static_cast<std::size_t>(cfg_.input_dim);
    const std::size_t m = static_cast<std::size_t>(cfg_.feature_maps);
    const std::size_t q = static_cast<std::size_t>(cfg_.dense_units);
    const std::size_t k = static_cast<std::size_t>(cfg_.classes);
    std::size_t off = 0;
    for (std::size_t b = 0; b < cfg_.filter_widths.size(); ++b) {
      const std::size_t w = static_cast<std::size_t>(cfg_.filter_widths[b]);
      tensors_.push_back({"conv" + std::to_string(b + 1) + ".weight", off, w * d * m});
      off += w * d * m;
      tensors_.push_back({"conv" + std::to_string(b + 1) + ".bias", off, m});
      off += m;
    }
    tensors_.push_back({"dense.weight", off, pooled_width() * q});
    off += pooled_width() * q;
    tensors_.push_back({"dense.bias", off, q});
    off += q;
    tensors_.push_back({"output.weight", off, q * k});
    off += q * k;
    tensors_.push_back({"output.bias", off, k});
    off += k;
    params_.assign(off, 0.0);
  }

  const CnnConfig& config() const { return cfg_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t param_count() const { return params_.size(); }
  const std::vector<Tensor>& tensors() const { return tensors_; }

  std::size_t banks() const { return cfg_.filter_widths.size(); }
  std::size_t pooled_width() const {
    return banks() * static_cast<std::size_t>(cfg_.feature_maps);
  }

  const double* conv_w(std::size_t bank) const { return params_.data() + tensors_[2 * bank].offset; }
  const double* conv_b(std::size_t bank) const {
    return params_.data() + tensors_[2 * bank + 1].offset;
  }
  const double* dense_w() const { return params_.data() + tensors_[2 * banks()].offset; }
  const double* dense_b() const { return params_.data() + tensors_[2 * banks() + 1].offset; }
  const double* out_w() const { return params_.data() + tensors_[2 * banks() + 2].offset; }
  const double* out_b() const { return params_.data() + tensors_[2 * banks() + 3].offset; }

  std::size_t conv_w_off(std::size_t bank) const { return tensors_[2 * bank].offset; }
  std::size_t conv_b_off(std::size_t bank) const { return tensors_[2 * bank + 1].offset; }
  std::size_t dense_w_off() const { return tensors_[2 * banks()].offset; }
  std::size_t dense_b_off() const { return tensors_[2 * banks() + 1].offset; }
  std::size_t out_w_off() const { return tensors_[2 * banks() + 2].offset; }
  std::size_t out_b_off() const { return tensors_[2 * banks() + 3].offset; }

 private:
  CnnConfig cfg_;
  std::vector<Tensor> tensors_;
  std::vector<double> params_;
};

// Uniform(-b, b) with b = sqrt(6 / (fan_in + fan_out)) per weight tensor,
// zero biases; fully determined by config.seed.
inline CnnModel init_model(const CnnConfig& config) {
  CnnModel model(config);
  auto& p = model.params();
  SplitMix64 rng = keyed_stream(config.seed, "init");
  const double d = config.input_dim;
  const double m = config.feature_maps;
  for (std::size_t b = 0; b < model.banks(); ++b) {
    const double w = config.filter_widths[b];
    const double bound = std::sqrt(6.0 / (w * d + w * m));
    const std::size_t off = model.conv_w_off(b);
    const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(d) *
                              static_cast<std::size_t>(m);
    for (std::size_t i = 0; i < count; ++i) p[off + i] = rng.next_uniform(-bound, bound);
  }
  {
    const double fan_in = static_cast<double>(model.pooled_width());
    const double bound = std::sqrt(6.0 / (fan_in + config.dense_units));
    const std::size_t off = model.dense_w_off();
    for (std::size_t i = 0; i < model.pooled_width() * static_cast<std::size_t>(config.dense_units);
         ++i) {
      p[off + i] = rng.next_uniform(-bound, bound);
    }
  }
  {
    const double bound = std::sqrt(6.0 / (config.dense_units + config.classes));
    const std::size_t off = model.out_w_off();
    for (std::size_t i = 0;
         i < static_cast<std::size_t>(config.dense_units) * static_cast<std::size_t>(config.classes);
         ++i) {
      p[off + i] = rng.next_uniform(-bound, bound);
    }
  }
  return model;
}

namespace nn_detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Everything the backward pass needs for one item.
struct ItemCache {
  std::vector<double> pooled;    // banks*M, max over valid windows (may be -inf)
  std::vector<int> argmax;       // banks*M, winning window start or -1
  std::vector<double> concat;    // banks*M, relu(pooled)
  std::vector<double> dropmask;  // banks*M, 0 or 1/(1-rate); 1.0 when dropout off
  std::vector<double> dropped;   // banks*M, concat * dropmask
  std::vector<double> dense_pre;
  std::vector<double> dense_act;
  std::vector<double> logits;
  std::vector<double> probs;
  double logsumexp = 0.0;
};

// A convolution window is valid only when it lies entirely within the item's
// true rows; windows touching padding are treated as -inf before pooling, so
// outputs are invariant to how much padding follows a sentence. Sentences
// shorter than a filter width have no valid window for that bank and pool to
// relu(-inf) = 0. ReLU commutes with max, so pooling the raw conv outputs
// and clamping afterwards matches ReLU-then-max exactly.
inline void forward_item(const CnnModel& model, const PaddedBatch& batch, std::size_t item,
                         const double* dropmask, ItemCache& c) {
  const CnnConfig& cfg = model.config();
  const std::size_t d = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t m = static_cast<std::size_t>(cfg.feature_maps);
  const std::size_t q = static_cast<std::size_t>(cfg.dense_units);
  const std::size_t k = static_cast<std::size_t>(cfg.classes);
  const std::size_t pw = model.pooled_width();
  const std::size_t n = batch.lengths[item];
  const float* x = batch.item(item);

  c.pooled.assign(pw, kNegInf);
  c.argmax.assign(pw, -1);
  std::vector<double> z(m);
  for (std::size_t b = 0; b < model.banks(); ++b) {
    const std::size_t w = static_cast<std::size_t>(cfg.filter_widths[b]);
    if (n < w) continue;
    const double* cw = model.conv_w(b);
    const double* cb = model.conv_b(b);
    double* pooled = c.pooled.data() + b * m;
    int* argmax = c.argmax.data() + b * m;
    for (std::size_t p = 0; p + w <= n; ++p) {
      std::copy(cb, cb + m, z.begin());
      for (std::size_t r = 0; r < w; ++r) {
        const float* row = x + (p + r) * d;
        const double* wr = cw + r * d * m;
        for (std::size_t dd = 0; dd < d; ++dd) {
          const double xv = row[dd];
          if (xv == 0.0) continue;
          const double* wcol = wr + dd * m;
          for (std::size_t f = 0; f < m; ++f) z[f] += wcol[f] * xv;
        }
      }
      for (std::size_t f = 0; f < m; ++f) {
        if (z[f] > pooled[f]) {
          pooled[f] = z[f];
          argmax[f] = static_cast<int>(p);
        }
      }
    }
  }

  c.concat.resize(pw);
  for (std::size_t j = 0; j < pw; ++j) c.concat[j] = std::max(0.0, c.pooled[j]);

  c.dropmask.resize(pw);
  c.dropped.resize(pw);
  for (std::size_t j = 0; j < pw; ++j) {
    c.dropmask[j] = dropmask ? dropmask[j] : 1.0;
    c.dropped[j] = c.concat[j] * c.dropmask[j];
  }

  const double* dw = model.dense_w();
  const double* db = model.dense_b();
  c.dense_pre.assign(q, 0.0);
  for (std::size_t j = 0; j < pw; ++j) {
    const double cj = c.dropped[j];
    if (cj == 0.0) continue;
    const double* wrow = dw + j * q;
    for (std::size_t u = 0; u < q; ++u) c.dense_pre[u] += wrow[u] * cj;
  }
  c.dense_act.resize(q);
  for (std::size_t u = 0; u < q; ++u) {
    c.dense_pre[u] += db[u];
    c.dense_act[u] = std::max(0.0, c.dense_pre[u]);
  }

  const double* ow = model.out_w();
  const double* ob = model.out_b();
  c.logits.assign(k, 0.0);
  for (std::size_t u = 0; u < q; ++u) {
    const double hu = c.dense_act[u];
    if (hu == 0.0) continue;
    const double* wrow = ow + u * k;
    for (std::size_t kk = 0; kk < k; ++kk) c.logits[kk] += wrow[kk] * hu;
  }
  for (std::size_t kk = 0; kk < k; ++kk) c.logits[kk] += ob[kk];

  double mx = c.logits[0];
  for (std::size_t kk = 1; kk < k; ++kk) mx = std::max(mx, c.logits[kk]);
  double sum = 0.0;
  c.probs.resize(k);
  for (std::size_t kk = 0; kk < k; ++kk) {
    c.probs[kk] = std::exp(c.logits[kk] - mx);
    sum += c.probs[kk];
  }
  for (std::size_t kk = 0; kk < k; ++kk) c.probs[kk] /= sum;
  c.logsumexp = mx + std::log(sum);
}

inline void check_batch(const CnnModel& model, const PaddedBatch& batch) {
  const CnnConfig& cfg = model.config();
  if (batch.size() == 0) return;
  if (batch.dim != static_cast<std::size_t>(cfg.input_dim)) {
    throw ShapeError("batch dim " + std::to_string(batch.dim) + " does not match model input dim " +
                     std::to_string(cfg.input_dim));
  }
  if (batch.max_len < static_cast<std::size_t>(cfg.max_filter_width())) {
    throw ShapeError("batch max_len " + std::to_string(batch.max_len) +
                     " is smaller than the largest filter width " +
                     std::to_string(cfg.max_filter_width()));
  }
}

}  // namespace nn_detail

// Class probabilities, batch.size() x classes row-major. In train mode a
// dropout stream must be supplied when the config has a nonzero rate; masks
// are drawn item by item in slot order.
inline std::vector<double> forward(const CnnModel& model, const PaddedBatch& batch,
                                   bool train_mode = false, SplitMix64* dropout_rng = nullptr) {
  nn_detail::check_batch(model, batch);
  const CnnConfig& cfg = model.config();
  const bool use_dropout = train_mode && cfg.dropout_rate > 0.0;
  if (use_dropout && dropout_rng == nullptr) {
    throw ConfigError("forward: train mode with dropout needs a dropout stream");
  }
  const std::size_t k = static_cast<std::size_t>(cfg.classes);
  const std::size_t pw = model.pooled_width();
  std::vector<double> out(batch.size() * k);
  nn_detail::ItemCache cache;
  std::vector<double> mask(pw);
  const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* mask_ptr = nullptr;
    if (use_dropout) {
      for (std::size_t j = 0; j < pw; ++j) {
        mask[j] = dropout_rng->next_unit() < cfg.dropout_rate ? 0.0 : keep_scale;
      }
      mask_ptr = mask.data();
    }
    nn_detail::forward_item(model, batch, i, mask_ptr, cache);
    std::copy(cache.probs.begin(), cache.probs.end(), out.begin() + i * k);
  }
  return out;
}

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same layout as CnnModel::params()
};

// Mean cross-entropy and its analytic gradient. Dropout is applied only when
// a stream is passed; the same mask realizes both the forward loss and its
// gradient. Inputs are frozen, so no gradient flows into the feature rows.
inline LossGrad loss_and_grad(const CnnModel& model, const PaddedBatch& batch,
                              SplitMix64* dropout_rng = nullptr) {
  nn_detail::check_batch(model, batch);
  if (batch.size() == 0) throw DataError("loss_and_grad: empty batch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch.labels[i] < 0) throw DataError("loss_and_grad: item without label", i);
    if (batch.labels[i] >= model.config().classes) {
      throw DataError("loss_and_grad: label outside class range", i);
    }
  }

  const CnnConfig& cfg = model.config();
  const std::size_t d = static_cast<std::size_t>(cfg.input_dim);
  const std::size_t m = static_cast<std::size_t>(cfg.feature_maps);
  const std::size_t q = static_cast<std::size_t>(cfg.dense_units);
  const std::size_t k = static_cast<std::size_t>(cfg.classes);
  const std::size_t pw = model.pooled_width();
  const bool use_dropout = dropout_rng != nullptr && cfg.dropout_rate > 0.0;
  const double keep_scale = 1.0 / (1.0 - cfg.dropout_rate);
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  LossGrad lg;
  lg.grad.assign(model.param_count(), 0.0);
  double* g = lg.grad.data();
  const double* dw = model.dense_w();
  const double* ow = model.out_w();

  nn_detail::ItemCache c;
  std::vector<double> mask(pw);
  std::vector<double> dlogits(k), dh(q), du(q), dconcat(pw);

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* mask_ptr = nullptr;
    if (use_dropout) {
      for (std::size_t j = 0; j < pw; ++j) {
        mask[j] = dropout_rng->next_unit() < cfg.dropout_rate ? 0.0 : keep_scale;
      }
      mask_ptr = mask.data();
    }
    nn_detail::forward_item(model, batch, i, mask_ptr, c);

    const int y = batch.labels[i];
    lg.loss += (c.logsumexp - c.logits[static_cast<std::size_t>(y)]) * inv_n;

    for (std::size_t kk = 0; kk < k; ++kk) {
      dlogits[kk] = (c.probs[kk] - (static_cast<int>(kk) == y ? 1.0 : 0.0)) * inv_n;
    }

    {
      double* gw = g + model.out_w_off();
      double* gb = g + model.out_b_off();
      std::fill(dh.begin(), dh.end(), 0.0);
      for (std::size_t u = 0; u < q; ++u) {
        const double hu = c.dense_act[u];
        const double* wrow = ow + u * k;
        double acc = 0.0;
        for (std::size_t kk = 0; kk < k; ++kk) {
          gw[u * k + kk] += hu * dlogits[kk];
          acc += wrow[kk] * dlogits[kk];
        }
        dh[u] = acc;
      }
      for (std::size_t kk = 0; kk < k; ++kk) gb[kk] += dlogits[kk];
    }

    for (std::size_t u = 0; u < q; ++u) du[u] = c.dense_pre[u] > 0.0 ? dh[u] : 0.0;

    {
      double* gw = g + model.dense_w_off();
      double* gb = g + model.dense_b_off();
      for (std::size_t j = 0; j < pw; ++j) {
        const double cj = c.dropped[j];
        const double* wrow = dw + j * q;
        double acc = 0.0;
        for (std::size_t u = 0; u < q; ++u) {
          if (cj != 0.0) gw[j * q + u] += cj * du[u];
          acc += wrow[u] * du[u];
        }
        dconcat[j] = acc * c.dropmask[j];
      }
      for (std::size_t u = 0; u < q; ++u) gb[u] += du[u];
    }

    const float* x = batch.item(i);
    for (std::size_t b = 0; b < model.banks(); ++b) {
      const std::size_t w = static_cast<std::size_t>(cfg.filter_widths[b]);
      double* gw = g + model.conv_w_off(b);
      double* gb = g + model.conv_b_off(b);
      for (std::size_t f = 0; f < m; ++f) {
        const std::size_t j = b * m + f;
        // Gradient flows only through the winning window, and only when the
        // pooled value cleared the ReLU.
        if (c.argmax[j] < 0 || c.pooled[j] <= 0.0) continue;
        const double dz = dconcat[j];
        if (dz == 0.0) continue;
        gb[f] += dz;
        const std::size_t p = static_cast<std::size_t>(c.argmax[j]);
        for (std::size_t r = 0; r < w; ++r) {
          const float* row = x + (p + r) * d;
          for (std::size_t dd = 0; dd < d; ++dd) {
            const double xv = row[dd];
            if (xv != 0.0) gw[(r * d + dd) * m + f] += dz * xv;
          }
        }
      }
    }
  }
  return lg;
}

struct TrainHistory {
  std::vector<double> loss;      // per epoch, mean over items
  std::vector<double> accuracy;  // per epoch, on the training data
  bool early_stopped = false;
  std::uint64_t final_params_id = 0;
};

inline std::vector<int> predict(const CnnModel& model, const PaddedBatch& batch) {
  const auto probs = forward(model, batch, false);
  const std::size_t k = static_cast<std::size_t>(model.config().classes);
  std::vector<int> out(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double* row = probs.data() + i * k;
    int best = 0;
    for (std::size_t kk = 1; kk < k; ++kk) {
      if (row[kk] > row[best]) best = static_cast<int>(kk);  // ties keep the lower id
    }
    out[i] = best;
  }
  return out;
}

namespace nn_detail {

inline PaddedBatch gather(const PaddedBatch& data, const std::vector<std::size_t>& ids) {
  PaddedBatch out;
  out.max_len = data.max_len;
  out.dim = data.dim;
  const std::size_t item_floats = data.max_len * data.dim;
  out.tensor.resize(ids.size() * item_floats);
  out.lengths.reserve(ids.size());
  out.labels.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    std::copy(data.item(ids[i]), data.item(ids[i]) + item_floats,
              out.tensor.begin() + static_cast<std::ptrdiff_t>(i * item_floats));
    out.lengths.push_back(data.lengths[ids[i]]);
    out.labels.push_back(data.labels[ids[i]]);
  }
  return out;
}

}  // namespace nn_detail

// Adam (beta1 0.9, beta2 0.999, eps 1e-8) over shuffled mini-batches.
// Training stops early when the epoch loss has not improved by at least 1e-4
// for 5 consecutive epochs. Fully determined by (model, data, config.seed).
inline std::pair<CnnModel, TrainHistory> train(CnnModel model, const PaddedBatch& data,
                                               const CnnConfig& config) {
  config.validate();
  if (!config.same_shape(model.config())) {
    throw ConfigError("train: config shape differs from the model's");
  }
  if (data.size() == 0) throw DataError("train: no training data");
  nn_detail::check_batch(model, data);

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  constexpr double kMinDelta = 1e-4;
  constexpr int kPatience = 5;

  SplitMix64 shuffle_rng = keyed_stream(config.seed, "shuffle");
  SplitMix64 dropout_rng = keyed_stream(config.seed, "dropout");

  std::vector<double> mom(model.param_count(), 0.0);
  std::vector<double> vel(model.param_count(), 0.0);
  double beta1_t = 1.0;
  double beta2_t = 1.0;

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainHistory history;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale_epochs = 0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    deterministic_shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const PaddedBatch mini = nn_detail::gather(data, ids);
      const LossGrad lg = loss_and_grad(model, mini, &dropout_rng);
      if (!std::isfinite(lg.loss)) {
        throw NumericsError("training loss is not finite", epoch);
      }
      loss_sum += lg.loss * static_cast<double>(ids.size());

      beta1_t *= kBeta1;
      beta2_t *= kBeta2;
      auto& p = model.params();
      for (std::size_t j = 0; j < p.size(); ++j) {
        const double gj = lg.grad[j];
        mom[j] = kBeta1 * mom[j] + (1.0 - kBeta1) * gj;
        vel[j] = kBeta2 * vel[j] + (1.0 - kBeta2) * gj * gj;
        const double mhat = mom[j] / (1.0 - beta1_t);
        const double vhat = vel[j] / (1.0 - beta2_t);
        p[j] -= config.learning_rate * mhat / (std::sqrt(vhat) + kEps);
        if (!std::isfinite(p[j])) {
          throw NumericsError("parameter became non-finite during update", epoch);
        }
      }
    }

    const double epoch_loss = loss_sum / static_cast<double>(data.size());
    const auto preds = predict(model, data);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (preds[i] == data.labels[i]) ++correct;
    }
    history.loss.push_back(epoch_loss);
    history.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(data.size()));

    if (best_loss - epoch_loss >= kMinDelta) {
      best_loss = epoch_loss;
      stale_epochs = 0;
    } else {
      ++stale_epochs;
      if (stale_epochs >= kPatience) {
        history.early_stopped = true;
        break;
      }
    }
  }

  history.final_params_id =
      fnv1a64(model.params().data(), model.params().size() * sizeof(double));
  return {std::move(model), std::move(history)};
}

// Checkpoint layout (version 1, all little endian):
//   magic "IWVNN", u32 version
//   u32 bank count, u32 per-bank filter width
//   u32 feature_maps, u32 dense_units, u32 input_dim, u32 classes
//   f64 dropout_rate, f64 learning_rate, u32 batch_size, u32 epochs, u64 seed
//   u32 tensor count; per tensor: u32 name length, name bytes,
//   u64 element count, f32 elements
// Parameters are held in doubles internally and exported as float32.
inline void save_checkpoint(const CnnModel& model, const std::filesystem::path& path) {
  const CnnConfig& cfg = model.config();
  std::string out = "IWVNN";
  append_u32_le(out, 1);
  append_u32_le(out, static_cast<std::uint32_t>(cfg.filter_widths.size()));
  for (int w : cfg.filter_widths) append_u32_le(out, static_cast<std::uint32_t>(w));
  append_u32_le(out, static_cast<std::uint32_t>(cfg.feature_maps));
  append_u32_le(out, static_cast<std::uint32_t>(cfg.dense_units));
  append_u32_le(out, static_cast<std::uint32_t>(cfg.input_dim));
  append_u32_le(out, static_cast<std::uint32_t>(cfg.classes));
  append_f64_le(out, cfg.dropout_rate);
  append_f64_le(out, cfg.learning_rate);
  append_u32_le(out, static_cast<std::uint32_t>(cfg.batch_size));
  append_u32_le(out, static_cast<std::uint32_t>(cfg.epochs));
  append_u64_le(out, cfg.seed);
  append_u32_le(out, static_cast<std::uint32_t>(model.tensors().size()));
  for (const auto& t : model.tensors()) {
    append_u32_le(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    append_u64_le(out, t.count);
    for (std::size_t i = 0; i < t.count; ++i) {
      append_f32_le(out, static_cast<float>(model.params()[t.offset + i]));
    }
  }
  write_file_bytes(path, out);
}

inline CnnModel load_checkpoint(const std::filesystem::path& path) {
  const std::string bytes = read_file_auto(path);
  ByteReader r(bytes);
  if (r.read_bytes(5, "checkpoint magic") != "IWVNN") {
    throw ParseError("not an iwv checkpoint file");
  }
  const std::uint32_t version = r.read_u32_le("checkpoint version");
  if (version != 1) {
    throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  CnnConfig cfg;
  const std::uint32_t banks = r.read_u32_le("checkpoint header");
  cfg.filter_widths.clear();
  for (std::uint32_t b = 0; b < banks; ++b) {
    cfg.filter_widths.push_back(static_cast<int>(r.read_u32_le("checkpoint header")));
  }
  cfg.feature_maps = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.dense_units = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.input_dim = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.classes = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.dropout_rate = r.read_f64_le("checkpoint header");
  cfg.learning_rate = r.read_f64_le("checkpoint header");
  cfg.batch_size = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.epochs = static_cast<int>(r.read_u32_le("checkpoint header"));
  cfg.seed = r.read_u64_le("checkpoint header");

  CnnModel model(cfg);
  const std::uint32_t tensor_count = r.read_u32_le("checkpoint tensors");
  if (tensor_count != model.tensors().size()) {
    throw ParseError("checkpoint tensor count does not match its config");
  }
  for (const auto& t : model.tensors()) {
    const std::uint32_t name_len = r.read_u32_le("tensor name");
    const std::string_view name = r.read_bytes(name_len, "tensor name");
    if (name != t.name) {
      throw ParseError("unexpected tensor \"" + std::string(name) + "\", wanted \"" + t.name +
                       "\"");
    }
    const std::uint64_t count = r.read_u64_le("tensor size");
    if (count != t.count) throw ParseError("tensor \"" + t.name + "\" has the wrong size");
    for (std::size_t i = 0; i < t.count; ++i) {
      model.params()[t.offset + i] = static_cast<double>(r.read_f32_le("tensor data"));
    }
  }
  if (!r.eof()) throw ParseError("trailing bytes after checkpoint payload", r.pos());
  return model;
}

}  // namespace iwv
