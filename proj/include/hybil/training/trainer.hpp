#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <string>

#include "hybil/metrics/report.hpp"
#include "hybil/models/model.hpp"
#include "hybil/preprocess/sample.hpp"
#include "hybil/training/adam.hpp"
#include "hybil/training/class_weights.hpp"
#include "hybil/training/early_stop.hpp"

namespace hybil {

struct TrainConfig {
  double learning_rate = 1e-3;
  double fine_tune_rate = 1e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs_base = 200;
  std::size_t max_epochs_head = 50;
  std::size_t max_epochs_finetune = 100;
  std::size_t patience = 10;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
    if (!(fine_tune_rate > 0.0)) throw ConfigError("train.fine_tune_rate must be positive");
    if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
    if (max_epochs_base == 0 || max_epochs_head == 0 || max_epochs_finetune == 0) {
      throw ConfigError("train: epoch limits must be positive");
    }
    if (patience == 0) throw ConfigError("train.patience must be positive");
    if (patience > std::min({max_epochs_base, max_epochs_head, max_epochs_finetune})) {
      throw ConfigError("train.patience exceeds an epoch limit");
    }
  }

  bool operator==(const TrainConfig&) const = default;
};

// A view of some samples of a dataset, by index.
struct SampleSet {
  const std::vector<SpectroSample>* all = nullptr;
  std::vector<std::size_t> indices;

  SampleSet() = default;
  SampleSet(const Dataset& ds, std::vector<std::size_t> idx) : all(&ds.samples), indices(std::move(idx)) {}
  explicit SampleSet(const Dataset& ds) : all(&ds.samples), indices(ds.size()) {
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
  }

  std::size_t size() const noexcept { return indices.size(); }
  bool empty() const noexcept { return indices.empty(); }
  const SpectroSample& operator[](std::size_t i) const { return (*all)[indices[i]]; }

  std::vector<std::size_t> class_counts(std::size_t k) const {
    std::vector<std::size_t> counts(k, 0);
    for (auto i : indices) ++counts.at((*all)[i].label);
    return counts;
  }
};

inline std::size_t predict(const Tensor& logits) {
  const auto d = logits.data();
  return static_cast<std::size_t>(std::max_element(d.begin(), d.end()) - d.begin());
}

struct Evaluation {
  ConfusionMatrix confusion;
  double loss = 0.0;  // mean unweighted cross-entropy
  std::vector<std::size_t> predictions;
};

namespace detail {

using LogitsFn = std::function<Tensor(std::size_t)>;

inline Evaluation evaluate_with(std::size_t n, std::size_t k, const std::function<std::size_t(std::size_t)>& label,
                                const LogitsFn& logits_of) {
  Evaluation e{ConfusionMatrix(k), 0.0, {}};
  for (std::size_t i = 0; i < n; ++i) {
    const Tensor logits = logits_of(i);
    e.loss += softmax_cross_entropy(logits, label(i)).loss;
    e.predictions.push_back(predict(logits));
    e.confusion.add(label(i), e.predictions.back());
  }
  if (n) e.loss /= static_cast<double>(n);
  return e;
}

}  // namespace detail

inline Evaluation evaluate(const Model& model, const SampleSet& set) {
  return detail::evaluate_with(
      set.size(), model.num_classes(), [&](std::size_t i) { return set[i].label; },
      [&](std::size_t i) { return model.forward(set[i].features); });
}

// FNV-1a over a parameter's id, shapes and bytes.
inline std::uint64_t parameter_checksum(const LayerParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) h = (h ^ b[i]) * 0x100000001b3ull;
  };
  mix(p.id.data(), p.id.size());
  for (const Tensor* t : {&p.weights, &p.bias}) {
    for (auto d : t->shape()) mix(&d, sizeof d);
    mix(t->raw(), t->size() * sizeof(float));
  }
  return h;
}

struct StageResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  Model model;
  StageResult stage;
};

// Checksums of every extractor parameter (weights and bias bytes, not the id).
using ExtractorChecksums = std::map<std::string, std::uint64_t>;

struct TwoStepResult {
  Model model;
  StageResult head;      // stage 1: extractors frozen
  StageResult finetune;  // stage 2: everything trainable
  ExtractorChecksums loaded;      // extractors as copied from the base models
  ExtractorChecksums after_head;  // the same parameters once stage 1 is done
};

inline ExtractorChecksums extractor_checksums(const Model& model) {
  ExtractorChecksums out;
  for (const auto& p : model.snapshot()) {
    if (!p.id.starts_with("head.")) out[p.id] = parameter_checksum({"", p.weights, p.bias});
  }
  return out;
}

namespace detail {

struct StagePlan {
  double lr;
  std::size_t max_epochs;
  bool baseline;  // record an epoch 0 before any update
  std::uint64_t seed;
};

using GradFn = std::function<double(std::size_t, double, Gradients&)>;

// Mini-batch Adam over the trainable parameters with early stopping; the model
// ends with the weights of the best validation epoch.
inline StageResult run_stage(Model& model, const SampleSet& train, const SampleSet& val, const TrainConfig& cfg,
                             const StagePlan& plan, const GradFn& grad_of, const LogitsFn& train_logits,
                             const LogitsFn& val_logits) {
  if (train.empty() || val.empty()) throw ConfigError("training needs nonempty train and validation splits");
  const std::size_t k = model.num_classes();
  const auto weights = compute_class_weights(train.class_counts(k)).weights;
  const auto params = model.trainable_parameters();
  AdamState adam;
  StageResult out;
  std::vector<LayerParams> best;

  auto score = [&](std::size_t epoch, double train_loss) {
    const auto e = evaluate_with(val.size(), k, [&](std::size_t i) { return val[i].label; }, val_logits);
    if (!std::isfinite(e.loss) || !std::isfinite(train_loss)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
    }
    out.history.push_back({epoch, train_loss, e.loss, class_report(e.confusion).weighted_f1});
    if (out.history.size() == 1 || e.loss < out.best_val_loss) {
      out.best_val_loss = e.loss;
      out.best_epoch = epoch;
      best = model.snapshot();
    }
  };

  if (plan.baseline) {
    double loss = 0.0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      loss += weights[train[i].label] * softmax_cross_entropy(train_logits(i), train[i].label).loss;
    }
    score(0, loss / static_cast<double>(train.size()));
  }
  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= plan.max_epochs; ++epoch) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(plan.seed, epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      Gradients acc;
      for (std::size_t j = start; j < stop; ++j) {
        const std::size_t i = order[j];
        epoch_loss += grad_of(i, weights[train[i].label], acc);
      }
      scale(acc, 1.0f / static_cast<float>(stop - start));
      adam_step(params, acc, adam, plan.lr);
    }
    score(epoch, epoch_loss / static_cast<double>(train.size()));
    if (early_stop_check(out.history, cfg.patience).stop) break;
  }
  model.restore(best);
  return out;
}

inline std::uint64_t kind_tag(ModelKind kind) { return static_cast<std::uint64_t>(kind); }

}  // namespace detail

// CNN or RNN base model trained end to end.
inline TrainResult train_base(ModelKind kind, const SampleSet& train, const SampleSet& val, const TrainConfig& cfg,
                              const ModelDims& dims, std::size_t num_classes) {
  cfg.validate();
  if (is_bilinear(kind)) throw ConfigError("train_base expects cnn or rnn, got " + std::string(to_string(kind)));
  Model model(kind, num_classes, dims, derive_seed(cfg.seed, 10 + detail::kind_tag(kind)));
  const detail::StagePlan plan{cfg.learning_rate, cfg.max_epochs_base, false,
                               derive_seed(cfg.seed, 20 + detail::kind_tag(kind))};
  auto stage = detail::run_stage(
      model, train, val, cfg, plan,
      [&](std::size_t i, double w, Gradients& acc) {
        return model.accumulate_gradients(train[i].features, train[i].label, w, acc);
      },
      [&](std::size_t i) { return model.forward(train[i].features); },
      [&](std::size_t i) { return model.forward(val[i].features); });
  return {std::move(model), std::move(stage)};
}

// Two-step procedure for bilinear models: extractors are loaded from trained
// base models, the pooling head is trained with them frozen, then the whole
// network is fine-tuned at the lower rate. Stage 2 starts with an epoch-0
// evaluation so it can never return weights worse than its starting point.
inline TwoStepResult train_bilinear_two_step(ModelKind kind, const Model* cnn_base, const Model* rnn_base,
                                             const SampleSet& train, const SampleSet& val, const TrainConfig& cfg,
                                             const ModelDims& dims, std::size_t num_classes) {
  cfg.validate();
  if (!is_bilinear(kind)) throw ConfigError(std::string(to_string(kind)) + " is not a bilinear model");
  Model model(kind, num_classes, dims, derive_seed(cfg.seed, 10 + detail::kind_tag(kind)));
  const auto [ka, kb] = stream_layout(kind);
  auto base_for = [&](ExtractorKind e) -> const Model& {
    const Model* m = e == ExtractorKind::cnn ? cnn_base : rnn_base;
    if (!m) throw ConfigError(std::string(to_string(kind)) + " needs a trained " + std::string(to_string(e)) + " base");
    return *m;
  };
  model.load_extractor(Stream::a, base_for(ka));
  model.load_extractor(Stream::b, base_for(*kb));
  const auto loaded = extractor_checksums(model);

  // Stage 1 on cached stream features.
  model.set_extractors_frozen(true);
  std::vector<StreamFeatures> train_f, val_f;
  for (std::size_t i = 0; i < train.size(); ++i) train_f.push_back(model.extract(train[i].features));
  for (std::size_t i = 0; i < val.size(); ++i) val_f.push_back(model.extract(val[i].features));
  const detail::StagePlan head_plan{cfg.learning_rate, cfg.max_epochs_head, false,
                                    derive_seed(cfg.seed, 30 + detail::kind_tag(kind))};
  auto head = detail::run_stage(
      model, train, val, cfg, head_plan,
      [&](std::size_t i, double w, Gradients& acc) {
        return model.accumulate_head_gradients(train_f[i], train[i].label, w, acc);
      },
      [&](std::size_t i) { return model.head(train_f[i]); }, [&](std::size_t i) { return model.head(val_f[i]); });
  train_f.clear();
  val_f.clear();
  const auto after_head = extractor_checksums(model);

  model.set_extractors_frozen(false);
  const detail::StagePlan tune_plan{cfg.fine_tune_rate, cfg.max_epochs_finetune, true,
                                    derive_seed(cfg.seed, 40 + detail::kind_tag(kind))};
  auto tune = detail::run_stage(
      model, train, val, cfg, tune_plan,
      [&](std::size_t i, double w, Gradients& acc) {
        return model.accumulate_gradients(train[i].features, train[i].label, w, acc);
      },
      [&](std::size_t i) { return model.forward(train[i].features); },
      [&](std::size_t i) { return model.forward(val[i].features); });
  return {std::move(model), std::move(head), std::move(tune), loaded, after_head};
}

}  // namespace hybil
