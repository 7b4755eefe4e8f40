#pragma once

#include <array>
#include <string>
#include <vector>

#include "hybil/models/feature_map.hpp"
#include "hybil/models/init.hpp"
#include "hybil/numcore/numcore.hpp"

namespace hybil {

// Three [conv 3x3 same -> relu -> max-pool] blocks over the sample viewed as a
// 32x9 image with 19 channels. Pools (2,1), (2,3), (2,1) take 32x9 down to the
// 4x3 output grid.
class CnnExtractor {
 public:
  static constexpr std::size_t kBlocks = 3;
  static constexpr std::array<PoolWindow, kBlocks> kPools{{{2, 1}, {2, 3}, {2, 1}}};

  struct Cache {
    std::array<Tensor, kBlocks> inputs;
    std::array<Tensor, kBlocks> pre_activations;
    std::array<std::vector<std::size_t>, kBlocks> argmax;
  };

  CnnExtractor() = default;

  CnnExtractor(const std::string& prefix, std::array<std::size_t, kBlocks> filters, Rng& rng) {
    std::size_t cin = kChannels;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      conv_[b] = init_layer(prefix + ".conv" + std::to_string(b + 1), {3, 3, cin, filters[b]}, 9 * cin, kHeGain, rng);
      cin = filters[b];
    }
  }

  std::size_t feature_dim() const { return conv_.back().weights.extent(3); }

  FeatureMap forward(const Tensor& sample, Cache* cache = nullptr) const {
    require_sample_shape(sample, "cnn_extract");
    Tensor x = sample;
    for (std::size_t b = 0; b < kBlocks; ++b) {
      Tensor pre = conv2d(x, conv_[b], {}, Padding::same);
      PoolResult pooled = max_pool2d(activate(pre, Activation::relu), kPools[b]);
      if (cache) {
        cache->inputs[b] = std::move(x);
        cache->pre_activations[b] = std::move(pre);
        cache->argmax[b] = std::move(pooled.argmax);
      }
      x = std::move(pooled.output);
    }
    return FeatureMap(x.reshaped({x.extent(0) * x.extent(1), x.extent(2)}));
  }

  // Accumulates parameter gradients into `grads` and returns d(sample).
  Tensor backward(const Cache& cache, const Tensor& d_features, Gradients& grads) const {
    Tensor g = d_features;
    for (std::size_t i = kBlocks; i-- > 0;) {
      const Tensor& pre = cache.pre_activations[i];
      Tensor d_act = max_pool2d_backward(pre.shape(), cache.argmax[i], g);
      Tensor d_pre = activate_backward(pre, Activation::relu, std::move(d_act));
      GradBundle gb = conv2d_backward(cache.inputs[i], conv_[i], d_pre, {}, Padding::same);
      accumulate(grads, gb.params);
      g = std::move(gb.input);
    }
    return g;
  }

  std::vector<LayerParams*> params() { return {&conv_[0], &conv_[1], &conv_[2]}; }
  std::vector<const LayerParams*> params() const { return {&conv_[0], &conv_[1], &conv_[2]}; }

 private:
  std::array<LayerParams, kBlocks> conv_;
};

}  // namespace hybil
