#pragma once

#include <array>
#include <string>
#include <vector>

#include "hybil/models/feature_map.hpp"
#include "hybil/models/init.hpp"
#include "hybil/numcore/numcore.hpp"

namespace hybil {

struct ConvLstmState {
  Tensor h;  // [H,W,Ch]
  Tensor c;  // [H,W,Ch]
};

// Everything one cell step needs for its backward pass.
struct ConvLstmCellCache {
  Tensor stacked;  // [H,W,Cin+Ch], input channels then hidden channels
  Tensor i, f, g, o;
  Tensor c_prev;
  Tensor tanh_c;
};

struct ConvLstmCellGrads {
  Tensor dx;
  Tensor dh_prev;
  Tensor dc_prev;
  LayerGrads params;
};

// One ConvLSTM step. The gate convolutions Wx*x + Wh*h are computed as a single
// 3x3 same-padded convolution over the channel-stacked [x, h] with kernel
// [3,3,Cin+Ch,4Ch]; output channel blocks are ordered (i, f, g, o).
//   i = sigmoid, f = sigmoid, g = tanh, o = sigmoid
//   c' = f*c + i*g,  h' = o*tanh(c')
inline ConvLstmState convlstm_cell(const Tensor& x, const ConvLstmState& prev, const LayerParams& params,
                                   ConvLstmCellCache* cache = nullptr) {
  if (x.rank() != 3 || prev.h.rank() != 3 || prev.c.shape() != prev.h.shape() || x.extent(0) != prev.h.extent(0) ||
      x.extent(1) != prev.h.extent(1)) {
    throw StructuralError("convlstm_cell: x " + shape_string(x.shape()) + ", h " + shape_string(prev.h.shape()) +
                          ", c " + shape_string(prev.c.shape()) + " are not spatially congruent");
  }
  const std::size_t hh = x.extent(0), ww = x.extent(1), cin = x.extent(2), ch = prev.h.extent(2);
  if (params.weights.rank() != 4 || params.weights.extent(2) != cin + ch || params.weights.extent(3) != 4 * ch) {
    throw StructuralError("convlstm_cell '" + params.id + "': kernel " + shape_string(params.weights.shape()) +
                          " does not fit input channels " + std::to_string(cin) + " and hidden channels " +
                          std::to_string(ch));
  }
  const std::size_t n = hh * ww;
  Tensor stacked({hh, ww, cin + ch});
  for (std::size_t p = 0; p < n; ++p) {
    float* s = stacked.raw() + p * (cin + ch);
    const float* xp = x.raw() + p * cin;
    const float* hp = prev.h.raw() + p * ch;
    std::copy(xp, xp + cin, s);
    std::copy(hp, hp + ch, s + cin);
  }
  const Tensor gates = conv2d(stacked, params, {}, Padding::same);

  Tensor i({hh, ww, ch}), f({hh, ww, ch}), g({hh, ww, ch}), o({hh, ww, ch});
  ConvLstmState next{Tensor({hh, ww, ch}), Tensor({hh, ww, ch})};
  Tensor tanh_c({hh, ww, ch});
  for (std::size_t p = 0; p < n; ++p) {
    const float* gp = gates.raw() + p * 4 * ch;
    for (std::size_t k = 0; k < ch; ++k) {
      const std::size_t e = p * ch + k;
      i[e] = sigmoid(gp[k]);
      f[e] = sigmoid(gp[ch + k]);
      g[e] = std::tanh(gp[2 * ch + k]);
      o[e] = sigmoid(gp[3 * ch + k]);
      next.c[e] = f[e] * prev.c[e] + i[e] * g[e];
      tanh_c[e] = std::tanh(next.c[e]);
      next.h[e] = o[e] * tanh_c[e];
    }
  }
  if (cache) {
    cache->stacked = std::move(stacked);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->c_prev = prev.c;
    cache->tanh_c = std::move(tanh_c);
  }
  return next;
}

inline ConvLstmCellGrads convlstm_cell_backward(const ConvLstmCellCache& cache, const LayerParams& params,
                                                const Tensor& dh_next, const Tensor& dc_next) {
  cache.i.require_same_shape(dh_next, "convlstm_cell_backward dh");
  cache.i.require_same_shape(dc_next, "convlstm_cell_backward dc");
  const std::size_t hh = cache.i.extent(0), ww = cache.i.extent(1), ch = cache.i.extent(2);
  const std::size_t cin = cache.stacked.extent(2) - ch;
  const std::size_t n = hh * ww;

  Tensor d_gates({hh, ww, 4 * ch});
  ConvLstmCellGrads out;
  out.dc_prev = Tensor({hh, ww, ch});
  for (std::size_t p = 0; p < n; ++p) {
    float* dg = d_gates.raw() + p * 4 * ch;
    for (std::size_t k = 0; k < ch; ++k) {
      const std::size_t e = p * ch + k;
      const float i = cache.i[e], f = cache.f[e], g = cache.g[e], o = cache.o[e], tc = cache.tanh_c[e];
      const float dh = dh_next[e];
      const float dc = dc_next[e] + dh * o * (1.0f - tc * tc);
      dg[k] = dc * g * i * (1.0f - i);
      dg[ch + k] = dc * cache.c_prev[e] * f * (1.0f - f);
      dg[2 * ch + k] = dc * i * (1.0f - g * g);
      dg[3 * ch + k] = dh * tc * o * (1.0f - o);
      out.dc_prev[e] = dc * f;
    }
  }
  GradBundle gb = conv2d_backward(cache.stacked, params, d_gates, {}, Padding::same);
  out.params = std::move(gb.params.at(params.id));
  out.dx = Tensor({hh, ww, cin});
  out.dh_prev = Tensor({hh, ww, ch});
  for (std::size_t p = 0; p < n; ++p) {
    const float* s = gb.input.raw() + p * (cin + ch);
    std::copy(s, s + cin, out.dx.raw() + p * cin);
    std::copy(s + cin, s + cin + ch, out.dh_prev.raw() + p * ch);
  }
  return out;
}

// Two stacked ConvLSTM layers unrolled over the 9 time frames. Each frame is a
// 32x19 single-channel map (frequency x EEG channel). The final hidden state of
// the second layer is max-pooled onto the 4x3 output grid.
class ConvLstmExtractor {
 public:
  static constexpr std::size_t kFrameRows = kFreqBins;
  static constexpr std::size_t kFrameCols = kChannels;

  struct Cache {
    std::vector<ConvLstmCellCache> layer1;
    std::vector<ConvLstmCellCache> layer2;
    Shape final_shape;
    std::vector<std::size_t> argmax;
  };

  ConvLstmExtractor() = default;

  ConvLstmExtractor(const std::string& prefix, std::size_t hidden1, std::size_t hidden2, Rng& rng) {
    lstm_[0] = init_layer(prefix + ".lstm1", {3, 3, 1 + hidden1, 4 * hidden1}, 9 * (1 + hidden1), kGateGain, rng);
    lstm_[1] = init_layer(prefix + ".lstm2", {3, 3, hidden1 + hidden2, 4 * hidden2}, 9 * (hidden1 + hidden2),
                          kGateGain, rng);
    // Forget gates start open.
    for (auto& layer : lstm_) {
      const std::size_t ch = layer.bias.size() / 4;
      for (std::size_t k = ch; k < 2 * ch; ++k) layer.bias[k] = 1.0f;
    }
  }

  std::size_t hidden1() const { return lstm_[0].weights.extent(3) / 4; }
  std::size_t feature_dim() const { return lstm_[1].weights.extent(3) / 4; }

  // Pool geometry onto the output grid: stride = floor(in/out), window covers the remainder.
  static PoolWindow grid_window() {
    return {kFrameRows - (kGridRows - 1) * (kFrameRows / kGridRows),
            kFrameCols - (kGridCols - 1) * (kFrameCols / kGridCols)};
  }
  static Stride grid_stride() { return {kFrameRows / kGridRows, kFrameCols / kGridCols}; }

  static Tensor frame(const Tensor& sample, std::size_t t) {
    Tensor x({kFrameRows, kFrameCols, 1});
    for (std::size_t fr = 0; fr < kFreqBins; ++fr) {
      for (std::size_t c = 0; c < kChannels; ++c) x.at(fr, c, 0) = sample.at(fr, t, c);
    }
    return x;
  }

  FeatureMap forward(const Tensor& sample, Cache* cache = nullptr) const {
    require_sample_shape(sample, "rnn_extract");
    const std::size_t h1 = hidden1(), h2 = feature_dim();
    ConvLstmState s1{Tensor::zeros({kFrameRows, kFrameCols, h1}), Tensor::zeros({kFrameRows, kFrameCols, h1})};
    ConvLstmState s2{Tensor::zeros({kFrameRows, kFrameCols, h2}), Tensor::zeros({kFrameRows, kFrameCols, h2})};
    if (cache) {
      cache->layer1.assign(kTimeFrames, {});
      cache->layer2.assign(kTimeFrames, {});
    }
    for (std::size_t t = 0; t < kTimeFrames; ++t) {
      s1 = convlstm_cell(frame(sample, t), s1, lstm_[0], cache ? &cache->layer1[t] : nullptr);
      s2 = convlstm_cell(s1.h, s2, lstm_[1], cache ? &cache->layer2[t] : nullptr);
    }
    PoolResult pooled = max_pool2d(s2.h, grid_window(), grid_stride());
    if (cache) {
      cache->final_shape = s2.h.shape();
      cache->argmax = std::move(pooled.argmax);
    }
    const Tensor& y = pooled.output;
    return FeatureMap(y.reshaped({y.extent(0) * y.extent(1), y.extent(2)}));
  }

  // Backpropagation through time; accumulates parameter gradients and returns d(sample).
  Tensor backward(const Cache& cache, const Tensor& d_features, Gradients& grads) const {
    const std::size_t h1 = hidden1(), h2 = feature_dim();
    Tensor dh2 = max_pool2d_backward(cache.final_shape, cache.argmax, d_features);
    Tensor dc2 = Tensor::zeros({kFrameRows, kFrameCols, h2});
    Tensor dh1 = Tensor::zeros({kFrameRows, kFrameCols, h1});
    Tensor dc1 = Tensor::zeros({kFrameRows, kFrameCols, h1});
    LayerGrads g1 = LayerGrads::zeros_like(lstm_[0]);
    LayerGrads g2 = LayerGrads::zeros_like(lstm_[1]);
    Tensor d_sample = Tensor::zeros(kSampleShape);
    for (std::size_t t = kTimeFrames; t-- > 0;) {
      ConvLstmCellGrads top = convlstm_cell_backward(cache.layer2[t], lstm_[1], dh2, dc2);
      g2 += top.params;
      dh2 = std::move(top.dh_prev);
      dc2 = std::move(top.dc_prev);
      dh1 += top.dx;
      ConvLstmCellGrads bottom = convlstm_cell_backward(cache.layer1[t], lstm_[0], dh1, dc1);
      g1 += bottom.params;
      dh1 = std::move(bottom.dh_prev);
      dc1 = std::move(bottom.dc_prev);
      for (std::size_t fr = 0; fr < kFreqBins; ++fr) {
        for (std::size_t c = 0; c < kChannels; ++c) d_sample.at(fr, t, c) = bottom.dx.at(fr, c, 0);
      }
    }
    accumulate(grads, lstm_[0].id, g1);
    accumulate(grads, lstm_[1].id, g2);
    return d_sample;
  }

  std::vector<LayerParams*> params() { return {&lstm_[0], &lstm_[1]}; }
  std::vector<const LayerParams*> params() const { return {&lstm_[0], &lstm_[1]}; }

 private:
  std::array<LayerParams, 2> lstm_;
};

}  // namespace hybil
