#pragma once

#include <cmath>
#include <string>

#include "hybil/core/random.hpp"
#include "hybil/numcore/layer.hpp"

namespace hybil {

// Uniform(-limit, limit) with limit = sqrt(gain / fan_in); zero bias.
inline LayerParams init_layer(std::string id, Shape weight_shape, std::size_t fan_in, double gain, Rng& rng) {
  const std::size_t out = weight_shape.back();
  LayerParams p{std::move(id), Tensor(std::move(weight_shape)), Tensor::zeros({out})};
  const double limit = std::sqrt(gain / static_cast<double>(fan_in));
  for (auto& w : p.weights.data()) w = static_cast<float>(rng.uniform(-limit, limit));
  return p;
}

// He-style gain for relu layers and the classifier.
inline constexpr double kHeGain = 6.0;
// Fan-in scaling without the relu factor, for sigmoid/tanh gates.
inline constexpr double kGateGain = 3.0;

}  // namespace hybil
