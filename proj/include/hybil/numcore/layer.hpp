#pragma once

#include <map>
#include <string>

#include "hybil/core/tensor.hpp"

namespace hybil {

// Trainable weights of one layer. The id is unique within a model and keys the
// layer in gradients, optimizer state and checkpoints.
struct LayerParams {
  std::string id;
  Tensor weights;
  Tensor bias;
};

struct LayerGrads {
  Tensor weights;
  Tensor bias;

  static LayerGrads zeros_like(const LayerParams& p) {
    return {Tensor::zeros(p.weights.shape()), Tensor::zeros(p.bias.shape())};
  }

  LayerGrads& operator+=(const LayerGrads& other) {
    weights += other.weights;
    bias += other.bias;
    return *this;
  }
};

using Gradients = std::map<std::string, LayerGrads>;

// Result of a single layer's backward pass.
struct GradBundle {
  Gradients params;
  Tensor input;
};

// Adds `g` into `acc[id]`, creating the entry on first use.
inline void accumulate(Gradients& acc, const std::string& id, const LayerGrads& g) {
  auto it = acc.find(id);
  if (it == acc.end()) {
    acc.emplace(id, g);
  } else {
    it->second += g;
  }
}

inline void accumulate(Gradients& acc, const Gradients& other) {
  for (const auto& [id, g] : other) accumulate(acc, id, g);
}

inline void scale(Gradients& grads, float s) {
  for (auto& [id, g] : grads) {
    g.weights *= s;
    g.bias *= s;
  }
}

}  // namespace hybil
