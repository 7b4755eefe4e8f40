#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hybil/models/bilinear.hpp"
#include "hybil/models/cnn.hpp"
#include "hybil/models/convlstm.hpp"

namespace hybil {

enum class ModelKind { cnn, rnn, bcnn, brnn, hybrid };
enum class ExtractorKind { cnn, rnn };
enum class Stream { a, b };

inline constexpr std::array<ModelKind, 5> kAllModelKinds{ModelKind::cnn, ModelKind::rnn, ModelKind::bcnn,
                                                        ModelKind::brnn, ModelKind::hybrid};

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn: return "cnn";
    case ModelKind::rnn: return "rnn";
    case ModelKind::bcnn: return "bcnn";
    case ModelKind::brnn: return "brnn";
    case ModelKind::hybrid: return "hybrid";
  }
  return "?";
}

// Column heading used in result tables.
inline std::string_view display_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn: return "CNN";
    case ModelKind::rnn: return "RNN";
    case ModelKind::bcnn: return "B-CNN";
    case ModelKind::brnn: return "B-RNN";
    case ModelKind::hybrid: return "Hybrid";
  }
  return "?";
}

inline ModelKind parse_model_kind(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (c != '-' && c != '_') s += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  for (auto k : kAllModelKinds) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("unknown model kind '" + std::string(text) + "' (expected cnn|rnn|bcnn|brnn|hybrid)");
}

inline bool is_bilinear(ModelKind kind) { return kind != ModelKind::cnn && kind != ModelKind::rnn; }

inline std::string_view to_string(ExtractorKind kind) { return kind == ExtractorKind::cnn ? "cnn" : "rnn"; }

// Extractor kinds feeding streams a and b (b absent for base models).
inline std::pair<ExtractorKind, std::optional<ExtractorKind>> stream_layout(ModelKind kind) {
  switch (kind) {
    case ModelKind::cnn: return {ExtractorKind::cnn, std::nullopt};
    case ModelKind::rnn: return {ExtractorKind::rnn, std::nullopt};
    case ModelKind::bcnn: return {ExtractorKind::cnn, ExtractorKind::cnn};
    case ModelKind::brnn: return {ExtractorKind::rnn, ExtractorKind::rnn};
    case ModelKind::hybrid: return {ExtractorKind::cnn, ExtractorKind::rnn};
  }
  throw ConfigError("bad model kind");
}

// Layer widths. The defaults are the full-size models (D = M = N = 64); smaller
// values give the debug-width models used for desk-scale runs.
struct ModelDims {
  std::size_t cnn_filters1 = 16;
  std::size_t cnn_filters2 = 32;
  std::size_t lstm_hidden1 = 32;
  std::size_t feature_dim = 64;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Either extractor behind one interface.
class Extractor {
 public:
  using Cache = std::variant<CnnExtractor::Cache, ConvLstmExtractor::Cache>;

  Extractor(ExtractorKind kind, const std::string& prefix, const ModelDims& dims, Rng& rng) {
    if (kind == ExtractorKind::cnn) {
      impl_ = CnnExtractor(prefix + "cnn", {dims.cnn_filters1, dims.cnn_filters2, dims.feature_dim}, rng);
    } else {
      impl_ = ConvLstmExtractor(prefix + "rnn", dims.lstm_hidden1, dims.feature_dim, rng);
    }
  }

  ExtractorKind kind() const {
    return std::holds_alternative<CnnExtractor>(impl_) ? ExtractorKind::cnn : ExtractorKind::rnn;
  }

  FeatureMap forward(const Tensor& sample, Cache* cache = nullptr) const {
    if (auto* cnn = std::get_if<CnnExtractor>(&impl_)) {
      if (!cache) return cnn->forward(sample);
      *cache = CnnExtractor::Cache{};
      return cnn->forward(sample, &std::get<CnnExtractor::Cache>(*cache));
    }
    const auto& rnn = std::get<ConvLstmExtractor>(impl_);
    if (!cache) return rnn.forward(sample);
    *cache = ConvLstmExtractor::Cache{};
    return rnn.forward(sample, &std::get<ConvLstmExtractor::Cache>(*cache));
  }

  Tensor backward(const Cache& cache, const Tensor& d_features, Gradients& grads) const {
    if (auto* cnn = std::get_if<CnnExtractor>(&impl_)) {
      return cnn->backward(std::get<CnnExtractor::Cache>(cache), d_features, grads);
    }
    return std::get<ConvLstmExtractor>(impl_).backward(std::get<ConvLstmExtractor::Cache>(cache), d_features, grads);
  }

  std::vector<LayerParams*> params() {
    return std::visit([](auto& e) { return e.params(); }, impl_);
  }
  std::vector<const LayerParams*> params() const {
    return std::visit([](const auto& e) { return e.params(); }, impl_);
  }

  // Output [locations, dims] derived from the layer geometry, without running data.
  Shape output_shape() const {
    if (auto* cnn = std::get_if<CnnExtractor>(&impl_)) {
      std::size_t h = kFreqBins, w = kTimeFrames;
      for (auto pool : CnnExtractor::kPools) {
        h = (h - pool.rows) / pool.rows + 1;
        w = (w - pool.cols) / pool.cols + 1;
      }
      return {h * w, cnn->feature_dim()};
    }
    const auto win = ConvLstmExtractor::grid_window();
    const auto st = ConvLstmExtractor::grid_stride();
    const std::size_t h = (ConvLstmExtractor::kFrameRows - win.rows) / st.rows + 1;
    const std::size_t w = (ConvLstmExtractor::kFrameCols - win.cols) / st.cols + 1;
    return {h * w, std::get<ConvLstmExtractor>(impl_).feature_dim()};
  }

 private:
  std::variant<CnnExtractor, ConvLstmExtractor> impl_;
};

// Feature maps of one sample from each stream (b empty for base models).
struct StreamFeatures {
  FeatureMap a;
  std::optional<FeatureMap> b;
};

// One of the five classifiers. Base models: extractor -> flatten -> dense.
// Bilinear models: two extractors -> bilinear pool -> signed sqrt -> l2 -> dense.
// Logits are returned raw; softmax lives in the loss and in prediction.
//
// Parameter ids: base models use "cnn.conv1".."cnn.conv3" or "rnn.lstm1",
// "rnn.lstm2"; bilinear streams prefix these with "a." / "b."; the classifier is
// always "head.dense".
class Model {
 public:
  Model(ModelKind kind, std::size_t num_classes, ModelDims dims, std::uint64_t seed)
      : kind_(kind), num_classes_(num_classes), dims_(dims) {
    if (num_classes < 2) throw ConfigError("model needs at least 2 classes");
    if (dims.feature_dim == 0 || dims.cnn_filters1 == 0 || dims.cnn_filters2 == 0 || dims.lstm_hidden1 == 0) {
      throw ConfigError("model widths must be positive");
    }
    Rng rng(seed);
    const auto [ka, kb] = stream_layout(kind);
    const bool bilinear = kb.has_value();
    a_.emplace(ka, bilinear ? "a." : "", dims, rng);
    if (kb) b_.emplace(*kb, "b.", dims, rng);
    check_contract();
    const std::size_t in = bilinear ? a_->output_shape()[1] * b_->output_shape()[1]
                                    : a_->output_shape()[0] * a_->output_shape()[1];
    head_ = init_layer("head.dense", {in, num_classes}, in, kHeGain, rng);
  }

  ModelKind kind() const { return kind_; }
  std::size_t num_classes() const { return num_classes_; }
  const ModelDims& dims() const { return dims_; }
  bool bilinear() const { return b_.has_value(); }

  const Extractor& extractor(Stream s) const {
    if (s == Stream::b && !b_) throw ConfigError(std::string(to_string(kind_)) + " model has no stream b");
    return s == Stream::a ? *a_ : *b_;
  }

  StreamFeatures extract(const Tensor& sample) const {
    StreamFeatures f{a_->forward(sample), std::nullopt};
    if (b_) f.b = b_->forward(sample);
    return f;
  }

  // Raw bilinear vector (pooled, before normalization).
  Tensor bilinear_vector(const Tensor& sample) const {
    if (!b_) throw ConfigError(std::string(to_string(kind_)) + " is not a bilinear model");
    const auto f = extract(sample);
    return bilinear_pool(f.a, *f.b);
  }

  Tensor head(const StreamFeatures& f) const { return head_forward(f, nullptr); }

  Tensor forward(const Tensor& sample) const { return head(extract(sample)); }

  // Logits for a batch, [batch, K].
  Tensor forward_batch(std::span<const Tensor> samples) const {
    if (samples.empty()) throw ConfigError("forward_batch: empty batch");
    Tensor out({samples.size(), num_classes_});
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const Tensor logits = forward(samples[i]);
      std::copy(logits.raw(), logits.raw() + num_classes_, out.raw() + i * num_classes_);
    }
    return out;
  }

  // Forward + backward of the weighted loss for one sample; gradients of every
  // trainable parameter are added into `acc`. Frozen extractors are skipped.
  double accumulate_gradients(const Tensor& sample, std::size_t label, double weight, Gradients& acc) const {
    Extractor::Cache ca, cb;
    StreamFeatures f;
    if (frozen_) {
      f = extract(sample);
    } else {
      f.a = a_->forward(sample, &ca);
      if (b_) f.b = b_->forward(sample, &cb);
    }
    HeadCache hc;
    const Tensor logits = head_forward(f, &hc);
    LossResult loss = softmax_cross_entropy(logits, label, weight);
    auto [da, db] = head_backward(f, hc, loss.dlogits, acc);
    if (!frozen_) {
      a_->backward(ca, da.values(), acc);
      if (b_) b_->backward(cb, db->values(), acc);
    }
    return loss.loss;
  }

  // Same as accumulate_gradients but from precomputed stream features; only the
  // head (and pooling path) is differentiated.
  double accumulate_head_gradients(const StreamFeatures& f, std::size_t label, double weight,
                                   Gradients& acc) const {
    HeadCache hc;
    const Tensor logits = head_forward(f, &hc);
    LossResult loss = softmax_cross_entropy(logits, label, weight);
    head_backward(f, hc, loss.dlogits, acc);
    return loss.loss;
  }

  void set_extractors_frozen(bool frozen) { frozen_ = frozen; }
  bool extractors_frozen() const { return frozen_; }

  // All parameters sorted by id.
  std::vector<LayerParams*> parameters() {
    std::vector<LayerParams*> out = a_->params();
    if (b_) {
      auto pb = b_->params();
      out.insert(out.end(), pb.begin(), pb.end());
    }
    out.push_back(&head_);
    std::sort(out.begin(), out.end(), [](auto* x, auto* y) { return x->id < y->id; });
    return out;
  }
  std::vector<const LayerParams*> parameters() const {
    std::vector<const LayerParams*> out;
    for (auto* p : const_cast<Model*>(this)->parameters()) out.push_back(p);
    return out;
  }

  std::vector<LayerParams*> trainable_parameters() {
    if (!frozen_) return parameters();
    return {&head_};
  }

  std::vector<const LayerParams*> extractor_parameters(Stream s) const { return extractor(s).params(); }

  LayerParams* find_parameter(std::string_view id) {
    for (auto* p : parameters()) {
      if (p->id == id) return p;
    }
    return nullptr;
  }

  std::vector<LayerParams> snapshot() const {
    std::vector<LayerParams> out;
    for (const auto* p : parameters()) out.push_back(*p);
    return out;
  }

  void restore(const std::vector<LayerParams>& saved) {
    auto params = parameters();
    if (saved.size() != params.size()) throw CheckpointError("snapshot does not match model");
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (saved[i].id != params[i]->id || saved[i].weights.shape() != params[i]->weights.shape() ||
          saved[i].bias.shape() != params[i]->bias.shape()) {
        throw CheckpointError("snapshot parameter '" + saved[i].id + "' does not match model");
      }
      *params[i] = saved[i];
    }
  }

  // Copies the extractor weights of a trained base model (or of a named
  // parameter source) into stream `s`. The source ids must be the base-model
  // ids of the stream's extractor kind ("cnn.*" for a CNN stream).
  void load_extractor(Stream s, const std::vector<LayerParams>& source) {
    Extractor& target = s == Stream::a ? *a_ : (b_ ? *b_ : throw ConfigError("model has no stream b"));
    const std::string prefix = b_ ? (s == Stream::a ? "a." : "b.") : "";
    for (LayerParams* dst : target.params()) {
      const std::string want = dst->id.substr(prefix.size());
      auto it = std::find_if(source.begin(), source.end(), [&](const LayerParams& p) { return p.id == want; });
      if (it == source.end()) {
        throw CheckpointError("parameter '" + want + "' required by stream " + (s == Stream::a ? "a" : "b") + " (" +
                              std::string(to_string(target.kind())) + ") not found in source");
      }
      if (it->weights.shape() != dst->weights.shape() || it->bias.shape() != dst->bias.shape()) {
        throw CheckpointError("parameter '" + want + "' has shape " + shape_string(it->weights.shape()) +
                              ", stream expects " + shape_string(dst->weights.shape()));
      }
      dst->weights = it->weights;
      dst->bias = it->bias;
    }
  }

  void load_extractor(Stream s, const Model& base) {
    if (base.bilinear()) throw CheckpointError("extractor source must be a base CNN or RNN model");
    load_extractor(s, base.snapshot());
  }

 private:
  struct HeadCache {
    Tensor pooled;
    Tensor rooted;
    Tensor head_input;
  };

  void check_contract() const {
    const Shape want{kLocations, dims_.feature_dim};
    for (const auto* e : {&*a_, b_ ? &*b_ : nullptr}) {
      if (e && e->output_shape() != want) {
        throw ConfigError(std::string(to_string(e->kind())) + " extractor yields " + shape_string(e->output_shape()) +
                          ", bilinear contract requires " + shape_string(want));
      }
    }
  }

  Tensor head_forward(const StreamFeatures& f, HeadCache* cache) const {
    if (bilinear() != f.b.has_value()) throw ConfigError("stream features do not match model kind");
    Tensor z;
    if (b_) {
      Tensor pooled = bilinear_pool(f.a, *f.b);
      Tensor rooted = signed_sqrt(pooled);
      z = l2_normalize(rooted);
      if (cache) {
        cache->pooled = std::move(pooled);
        cache->rooted = std::move(rooted);
      }
    } else {
      z = f.a.values().reshaped({f.a.values().size()});
    }
    Tensor logits = dense(z, head_);
    if (cache) cache->head_input = std::move(z);
    return logits;
  }

  std::pair<FeatureMap, std::optional<FeatureMap>> head_backward(const StreamFeatures& f, const HeadCache& hc,
                                                                 const Tensor& dlogits, Gradients& acc) const {
    GradBundle gb = dense_backward(hc.head_input, head_, dlogits);
    accumulate(acc, gb.params);
    if (!b_) return {FeatureMap(gb.input.reshaped(f.a.values().shape())), std::nullopt};
    Tensor d_rooted = l2_normalize_backward(hc.rooted, std::move(gb.input));
    Tensor d_pooled = signed_sqrt_backward(hc.pooled, std::move(d_rooted));
    if (frozen_) return {FeatureMap(), std::nullopt};
    auto [da, db] = bilinear_pool_backward(f.a, *f.b, d_pooled);
    return {std::move(da), std::move(db)};
  }

  ModelKind kind_;
  std::size_t num_classes_;
  ModelDims dims_;
  std::optional<Extractor> a_;
  std::optional<Extractor> b_;
  LayerParams head_;
  bool frozen_ = false;
};

}  // namespace hybil
