#include <gtest/gtest.h>

#include <numeric>

#include "hybil/models/bilinear.hpp"
#include "hybil/models/model.hpp"
#include "support/oracles.hpp"

namespace hybil {
namespace {

using testing::finite_difference;
using testing::finite_difference_masked;
using testing::random_projection;
using testing::random_tensor;
using testing::relative_error;

ModelDims tiny_dims() { return {.cnn_filters1 = 2, .cnn_filters2 = 3, .lstm_hidden1 = 2, .feature_dim = 4}; }

void zero_parameters(Model& m) {
  for (auto* p : m.parameters()) {
    p->weights.fill(0.0f);
    p->bias.fill(0.0f);
  }
}

TEST(Extractors, FullWidthOutputShapes) {
  Rng rng(1);
  const Tensor sample = random_tensor(kSampleShape, rng);
  CnnExtractor cnn("cnn", {16, 32, 64}, rng);
  EXPECT_EQ(cnn.forward(sample).values().shape(), (Shape{12, 64}));
  ConvLstmExtractor rnn("rnn", 32, 64, rng);
  EXPECT_EQ(rnn.forward(sample).values().shape(), (Shape{12, 64}));
}

TEST(Extractors, WrongInputShapeIsStructuralError) {
  Rng rng(2);
  CnnExtractor cnn("cnn", {2, 2, 4}, rng);
  ConvLstmExtractor rnn("rnn", 2, 4, rng);
  EXPECT_THROW(cnn.forward(Tensor({32, 9, 18})), StructuralError);
  EXPECT_THROW(rnn.forward(Tensor({9, 32, 19})), StructuralError);
}

TEST(Extractors, ZeroInputAndZeroParametersGiveZeroFeatures) {
  Model m(ModelKind::hybrid, 3, tiny_dims(), 5);
  zero_parameters(m);
  const auto f = m.extract(Tensor::zeros(kSampleShape));
  for (float v : f.a.values().data()) EXPECT_EQ(v, 0.0f);
  for (float v : f.b->values().data()) EXPECT_EQ(v, 0.0f);
}

TEST(Extractors, ForwardIsBitExactAcrossRuns) {
  Rng rng(3);
  const Tensor sample = random_tensor(kSampleShape, rng);
  for (auto kind : {ModelKind::cnn, ModelKind::rnn}) {
    Model a(kind, 2, tiny_dims(), 17), b(kind, 2, tiny_dims(), 17);
    EXPECT_EQ(a.extract(sample).a.values(), b.extract(sample).a.values());
  }
}

TEST(ConvLstmCell, ZeroEverythingGivesZeroState) {
  LayerParams p{"cell", Tensor::zeros({3, 3, 3, 8}), Tensor::zeros({8})};
  ConvLstmState s{Tensor::zeros({4, 5, 2}), Tensor::zeros({4, 5, 2})};
  auto next = convlstm_cell(Tensor::zeros({4, 5, 1}), s, p);
  for (float v : next.h.data()) EXPECT_EQ(v, 0.0f);
  for (float v : next.c.data()) EXPECT_EQ(v, 0.0f);
}

TEST(ConvLstmCell, SaturatedGatesKeepMemory) {
  Rng rng(4);
  const std::size_t ch = 2;
  LayerParams p{"cell", Tensor::zeros({3, 3, 1 + ch, 4 * ch}), Tensor::zeros({4 * ch})};
  for (std::size_t k = 0; k < ch; ++k) {
    p.bias[k] = -100.0f;      // input gate closed
    p.bias[ch + k] = 100.0f;  // forget gate open
  }
  ConvLstmState s{random_tensor({4, 3, ch}, rng), random_tensor({4, 3, ch}, rng)};
  auto next = convlstm_cell(random_tensor({4, 3, 1}, rng), s, p);
  EXPECT_EQ(next.c.values(), s.c.values());
}

TEST(ConvLstmCell, ShapeMismatchIsStructuralError) {
  LayerParams p{"cell", Tensor::zeros({3, 3, 3, 8}), Tensor::zeros({8})};
  ConvLstmState s{Tensor::zeros({4, 5, 2}), Tensor::zeros({4, 5, 2})};
  EXPECT_THROW(convlstm_cell(Tensor::zeros({4, 4, 1}), s, p), StructuralError);
  EXPECT_THROW(convlstm_cell(Tensor::zeros({4, 5, 2}), s, p), StructuralError);
}

TEST(ConvLstmCell, GradientsMatchFiniteDifferences) {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t cin = 2, ch = 3;
    LayerParams p{"cell", random_tensor({3, 3, cin + ch, 4 * ch}, rng, -0.5, 0.5), random_tensor({4 * ch}, rng)};
    Tensor x = random_tensor({4, 3, cin}, rng);
    ConvLstmState s{random_tensor({4, 3, ch}, rng), random_tensor({4, 3, ch}, rng)};
    auto ph = random_projection({4, 3, ch}, rng);
    auto pc = random_projection({4, 3, ch}, rng);
    auto loss = [&] {
      auto n = convlstm_cell(x, s, p);
      return ph(n.h) + pc(n.c);
    };
    ConvLstmCellCache cache;
    convlstm_cell(x, s, p, &cache);
    auto g = convlstm_cell_backward(cache, p, ph.weights, pc.weights);
    EXPECT_LT(relative_error(g.params.weights, finite_difference(p.weights, loss)), 1e-3);
    EXPECT_LT(relative_error(g.params.bias, finite_difference(p.bias, loss)), 1e-3);
    EXPECT_LT(relative_error(g.dx, finite_difference(x, loss)), 1e-3);
    EXPECT_LT(relative_error(g.dh_prev, finite_difference(s.h, loss)), 1e-3);
    EXPECT_LT(relative_error(g.dc_prev, finite_difference(s.c, loss)), 1e-3);
  }
}

TEST(ConvLstmExtractor, StateAccumulatesOverTime) {
  Rng rng(6);
  ConvLstmExtractor rnn("rnn", 2, 4, rng);
  // Every time step carries the same frame, versus only the first step.
  const Tensor frame = random_tensor({kFreqBins, kChannels}, rng);
  Tensor constant(kSampleShape), single = Tensor::zeros(kSampleShape);
  for (std::size_t f = 0; f < kFreqBins; ++f)
    for (std::size_t t = 0; t < kTimeFrames; ++t)
      for (std::size_t c = 0; c < kChannels; ++c) {
        constant.at(f, t, c) = frame.at(f, c);
        if (t == 0) single.at(f, t, c) = frame.at(f, c);
      }
  EXPECT_NE(rnn.forward(constant).values(), rnn.forward(single).values());
}

TEST(ConvLstmExtractor, GridPoolCoversFrame) {
  const auto w = ConvLstmExtractor::grid_window();
  const auto s = ConvLstmExtractor::grid_stride();
  EXPECT_EQ((kFreqBins - w.rows) / s.rows + 1, kGridRows);
  EXPECT_EQ((kChannels - w.cols) / s.cols + 1, kGridCols);
  EXPECT_EQ((kGridRows - 1) * s.rows + w.rows, kFreqBins);
  EXPECT_EQ((kGridCols - 1) * s.cols + w.cols, kChannels);
}

TEST(BilinearPool, SingleOuterProduct) {
  FeatureMap a(Tensor({1, 2}, {1, 2})), b(Tensor({1, 2}, {3, 4}));
  EXPECT_EQ(bilinear_pool(a, b).values(), (std::vector<float>{3, 4, 6, 8}));
  FeatureMap z(Tensor::zeros({1, 2}));
  const Tensor zero = bilinear_pool(a, z);
  for (float v : zero.data()) EXPECT_EQ(v, 0.0f);
}

TEST(BilinearPool, MatchesTripleLoopOracle) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    FeatureMap a(random_tensor({12, 64}, rng)), b(random_tensor({12, 64}, rng));
    const Tensor phi = bilinear_pool(a, b);
    const auto ref = testing::bilinear_oracle(a.values(), b.values());
    ASSERT_EQ(phi.size(), 4096u);
    for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(phi[i], ref[i], 1e-4);
  }
}

TEST(BilinearPool, IsBilinear) {
  Rng rng(8);
  FeatureMap a1(random_tensor({12, 5}, rng)), a2(random_tensor({12, 5}, rng)), b(random_tensor({12, 4}, rng));
  const float alpha = -1.7f;
  const Tensor scaled = bilinear_pool(FeatureMap(a1.values() * alpha), b);
  const Tensor base = bilinear_pool(a1, b) * alpha;
  for (std::size_t i = 0; i < scaled.size(); ++i) EXPECT_NEAR(scaled[i], base[i], 1e-4);
  const Tensor sum = bilinear_pool(FeatureMap(a1.values() + a2.values()), b);
  const Tensor parts = bilinear_pool(a1, b) + bilinear_pool(a2, b);
  for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_NEAR(sum[i], parts[i], 1e-4);
}

TEST(BilinearPool, TransposeDualityAndPermutationInvariance) {
  Rng rng(9);
  FeatureMap a(random_tensor({12, 6}, rng)), b(random_tensor({12, 5}, rng));
  const Tensor ab = bilinear_pool(a, b), ba = bilinear_pool(b, a);
  for (std::size_t m = 0; m < 6; ++m)
    for (std::size_t n = 0; n < 5; ++n) EXPECT_NEAR(ab[m * 5 + n], ba[n * 6 + m], 1e-5);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::size_t>(perm));
  Tensor pa({12, 6}), pb({12, 5});
  for (std::size_t o = 0; o < 12; ++o) {
    for (std::size_t m = 0; m < 6; ++m) pa.at(o, m) = a.values().at(perm[o], m);
    for (std::size_t n = 0; n < 5; ++n) pb.at(o, n) = b.values().at(perm[o], n);
  }
  const Tensor permuted = bilinear_pool(FeatureMap(pa), FeatureMap(pb));
  for (std::size_t i = 0; i < ab.size(); ++i) EXPECT_NEAR(permuted[i], ab[i], 1e-5);
}

TEST(BilinearPool, SelfPoolingIsSymmetric) {
  Rng rng(10);
  FeatureMap a(random_tensor({12, 7}, rng));
  const Tensor phi = bilinear_pool(a, a);
  for (std::size_t m = 0; m < 7; ++m)
    for (std::size_t n = 0; n < 7; ++n) EXPECT_EQ(phi[m * 7 + n], phi[n * 7 + m]);
}

TEST(BilinearPool, LocationMismatchIsStructuralError) {
  EXPECT_THROW(bilinear_pool(FeatureMap(Tensor({12, 4})), FeatureMap(Tensor({11, 4}))), StructuralError);
  EXPECT_THROW(bilinear_pool_backward(FeatureMap(Tensor({2, 2})), FeatureMap(Tensor({2, 2})), Tensor({5})),
               StructuralError);
}

TEST(BilinearPoolBackward, HandCaseAndZeroUpstream) {
  FeatureMap a(Tensor({1, 2}, {1, 0})), b(Tensor({1, 2}, {0, 1}));
  auto [da, db] = bilinear_pool_backward(a, b, Tensor({4}, 1.0f));
  // dA = U b = (1, 1); dB = U^T a = (1, 1)
  EXPECT_EQ(da.values().values(), (std::vector<float>{1, 1}));
  EXPECT_EQ(db.values().values(), (std::vector<float>{1, 1}));
  auto [za, zb] = bilinear_pool_backward(a, b, Tensor::zeros({4}));
  for (float v : za.values().data()) EXPECT_EQ(v, 0.0f);
  for (float v : zb.values().data()) EXPECT_EQ(v, 0.0f);
}

TEST(BilinearPoolBackward, MatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    FeatureMap a(random_tensor({12, 4}, rng)), b(random_tensor({12, 3}, rng));
    auto proj = random_projection({12}, rng);
    auto [da, db] = bilinear_pool_backward(a, b, proj.weights);
    auto loss = [&] { return proj(bilinear_pool(a, b)); };
    EXPECT_LT(relative_error(da.values(), finite_difference(a.values(), loss)), 1e-3);
    EXPECT_LT(relative_error(db.values(), finite_difference(b.values(), loss)), 1e-3);
  }
}

TEST(Model, FullWidthHybridContract) {
  Model m(ModelKind::hybrid, 8, ModelDims{}, 1);
  EXPECT_EQ(m.extractor(Stream::a).output_shape(), (Shape{12, 64}));
  EXPECT_EQ(m.extractor(Stream::b).output_shape(), (Shape{12, 64}));
  EXPECT_EQ(m.find_parameter("head.dense")->weights.shape(), (Shape{4096, 8}));
  Rng rng(2);
  std::vector<Tensor> batch{random_tensor(kSampleShape, rng), random_tensor(kSampleShape, rng)};
  EXPECT_EQ(m.forward_batch(batch).shape(), (Shape{2, 8}));
  EXPECT_EQ(m.bilinear_vector(batch[0]).size(), 4096u);
}

TEST(Model, StreamLayoutsAndIds) {
  std::vector<std::string> ids;
  Model hybrid(ModelKind::hybrid, 3, tiny_dims(), 1);
  for (auto* p : hybrid.parameters()) ids.push_back(p->id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a.cnn.conv1", "a.cnn.conv2", "a.cnn.conv3", "b.rnn.lstm1", "b.rnn.lstm2",
                                           "head.dense"}));
  Model bcnn(ModelKind::bcnn, 3, tiny_dims(), 1);
  EXPECT_EQ(bcnn.extractor(Stream::b).kind(), ExtractorKind::cnn);
  Model brnn(ModelKind::brnn, 3, tiny_dims(), 1);
  EXPECT_EQ(brnn.extractor(Stream::a).kind(), ExtractorKind::rnn);
  Model cnn(ModelKind::cnn, 3, tiny_dims(), 1);
  EXPECT_THROW(cnn.extractor(Stream::b), ConfigError);
  EXPECT_THROW(cnn.bilinear_vector(Tensor::zeros(kSampleShape)), ConfigError);
  EXPECT_EQ(cnn.find_parameter("head.dense")->weights.shape(), (Shape{48, 3}));
}

TEST(Model, ParseAndDisplayNames) {
  EXPECT_EQ(parse_model_kind("B-CNN"), ModelKind::bcnn);
  EXPECT_EQ(parse_model_kind("b_rnn"), ModelKind::brnn);
  EXPECT_EQ(parse_model_kind("Hybrid"), ModelKind::hybrid);
  EXPECT_THROW(parse_model_kind("lstm"), ConfigError);
  EXPECT_EQ(display_name(ModelKind::bcnn), "B-CNN");
}

TEST(Model, InvalidConstructionIsConfigError) {
  EXPECT_THROW(Model(ModelKind::cnn, 1, tiny_dims(), 1), ConfigError);
  ModelDims bad = tiny_dims();
  bad.feature_dim = 0;
  EXPECT_THROW(Model(ModelKind::hybrid, 2, bad, 1), ConfigError);
}

TEST(Model, PredictionIsShiftInvariant) {
  Rng rng(3);
  Model m(ModelKind::bcnn, 4, tiny_dims(), 3);
  const Tensor logits = m.forward(random_tensor(kSampleShape, rng));
  Tensor shifted = logits;
  for (auto& v : shifted.data()) v += 12.5f;
  EXPECT_EQ(argmax(logits), argmax(shifted));
}

TEST(Model, StreamFeaturesMustMatchKind) {
  Model m(ModelKind::hybrid, 2, tiny_dims(), 3);
  StreamFeatures f{FeatureMap(Tensor({12, 4})), std::nullopt};
  EXPECT_THROW(m.head(f), ConfigError);
}

// Relu masks and pooling argmax of every extractor stream.
std::vector<std::size_t> activation_pattern(const Model& m, const Tensor& sample) {
  std::vector<std::size_t> sig;
  for (auto s : {Stream::a, Stream::b}) {
    if (s == Stream::b && !m.bilinear()) break;
    Extractor::Cache cache;
    m.extractor(s).forward(sample, &cache);
    if (const auto* c = std::get_if<CnnExtractor::Cache>(&cache)) {
      for (std::size_t b = 0; b < CnnExtractor::kBlocks; ++b) {
        for (float v : c->pre_activations[b].data()) sig.push_back(v > 0.0f);
        sig.insert(sig.end(), c->argmax[b].begin(), c->argmax[b].end());
      }
    } else {
      const auto& r = std::get<ConvLstmExtractor::Cache>(cache);
      sig.insert(sig.end(), r.argmax.begin(), r.argmax.end());
    }
  }
  return sig;
}

// Every parameter of a model against central differences of the weighted loss.
// Probes that flip a relu or pooling decision are excluded. A whole-model
// forward in float32 rounds the loss to ~1e-8, so the step is 3e-3 here.
void check_model_gradients(Model& m, const Tensor& sample, std::size_t label, double weight) {
  Gradients grads;
  m.accumulate_gradients(sample, label, weight, grads);
  auto loss = [&] { return softmax_cross_entropy(m.forward(sample), label, weight).loss; };
  auto pattern = [&] { return activation_pattern(m, sample); };
  std::size_t total = 0, skipped = 0;
  for (auto* p : m.parameters()) {
    SCOPED_TRACE(p->id);
    const auto& g = grads.at(p->id);
    for (auto [analytic, param] : {std::pair{&g.weights, &p->weights}, std::pair{&g.bias, &p->bias}}) {
      const auto fd = finite_difference_masked(*param, loss, pattern, 3e-3f);
      EXPECT_LT(relative_error(*analytic, fd), 1e-3);
      total += param->size();
      skipped += fd.skipped;
    }
  }
  EXPECT_LE(skipped * 4, total * 3) << "too few kink-free probes";
}

TEST(Model, HybridEndToEndGradientCheck) {
  Rng rng(12);
  Model m(ModelKind::hybrid, 3, tiny_dims(), 99);
  check_model_gradients(m, random_tensor(kSampleShape, rng), 1, 1.3);
}

TEST(Model, BaseModelGradientCheck) {
  Rng rng(13);
  for (auto kind : {ModelKind::cnn, ModelKind::rnn, ModelKind::bcnn}) {
    Model m(kind, 2, tiny_dims(), 5);
    check_model_gradients(m, random_tensor(kSampleShape, rng), 0, 1.0);
  }
}

TEST(Model, FrozenExtractorsReceiveNoGradients) {
  Rng rng(14);
  Model m(ModelKind::hybrid, 3, tiny_dims(), 7);
  m.set_extractors_frozen(true);
  Gradients grads;
  m.accumulate_gradients(random_tensor(kSampleShape, rng), 2, 1.0, grads);
  EXPECT_EQ(grads.size(), 1u);
  EXPECT_TRUE(grads.contains("head.dense"));
  ASSERT_EQ(m.trainable_parameters().size(), 1u);
  EXPECT_EQ(m.trainable_parameters()[0]->id, "head.dense");
}

TEST(Model, ExtractorTransplant) {
  Model cnn(ModelKind::cnn, 3, tiny_dims(), 1);
  Model rnn(ModelKind::rnn, 3, tiny_dims(), 2);
  Model hybrid(ModelKind::hybrid, 3, tiny_dims(), 3);
  hybrid.load_extractor(Stream::a, cnn);
  hybrid.load_extractor(Stream::b, rnn);
  EXPECT_EQ(hybrid.find_parameter("a.cnn.conv2")->weights, cnn.find_parameter("cnn.conv2")->weights);
  EXPECT_EQ(hybrid.find_parameter("b.rnn.lstm1")->bias, rnn.find_parameter("rnn.lstm1")->bias);
  EXPECT_THROW(hybrid.load_extractor(Stream::b, cnn), CheckpointError);
  EXPECT_THROW(hybrid.load_extractor(Stream::a, hybrid), CheckpointError);
  ModelDims wider = tiny_dims();
  wider.cnn_filters1 = 5;
  Model other(ModelKind::cnn, 3, wider, 1);
  EXPECT_THROW(hybrid.load_extractor(Stream::a, other), CheckpointError);
}

TEST(Model, SnapshotRestore) {
  Model m(ModelKind::bcnn, 2, tiny_dims(), 1);
  const auto saved = m.snapshot();
  m.find_parameter("b.cnn.conv1")->weights.fill(3.0f);
  m.restore(saved);
  EXPECT_EQ(m.find_parameter("b.cnn.conv1")->weights, saved[3].weights);
}

}  // namespace
}  // namespace hybil
