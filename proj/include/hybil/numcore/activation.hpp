#pragma once

#include <cmath>
#include <string_view>

#include "hybil/core/tensor.hpp"

namespace hybil {

enum class Activation { relu, sigmoid, tanh };

inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }

inline Tensor activate(Tensor x, Activation kind) {
  switch (kind) {
    case Activation::relu:
      for (auto& v : x.data()) v = v > 0.0f ? v : 0.0f;
      break;
    case Activation::sigmoid:
      for (auto& v : x.data()) v = sigmoid(v);
      break;
    case Activation::tanh:
      for (auto& v : x.data()) v = std::tanh(v);
      break;
  }
  return x;
}

// Backward from the pre-activation input. relu'(0) is taken as 0.
inline Tensor activate_backward(const Tensor& input, Activation kind, Tensor upstream) {
  input.require_same_shape(upstream, "activate_backward");
  auto g = upstream.data();
  auto x = input.data();
  switch (kind) {
    case Activation::relu:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = x[i] > 0.0f ? g[i] : 0.0f;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const float s = sigmoid(x[i]);
        g[i] *= s * (1.0f - s);
      }
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < g.size(); ++i) {
        const float t = std::tanh(x[i]);
        g[i] *= 1.0f - t * t;
      }
      break;
  }
  return upstream;
}

inline std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "?";
}

}  // namespace hybil
