#pragma once

#include <cstddef>
#include <vector>

#include "hybil/numcore/conv.hpp"

namespace hybil {

struct PoolWindow {
  std::size_t rows = 2;
  std::size_t cols = 2;
};

struct PoolResult {
  Tensor output;
  // Linear index into the input for every output element.
  std::vector<std::size_t> argmax;
};

// Valid (unpadded) max pooling over [H,W,C]. Ties go to the lowest linear
// input index, which keeps the backward pass deterministic.
inline PoolResult max_pool2d(const Tensor& input, PoolWindow window, Stride stride) {
  if (input.rank() != 3) throw StructuralError("max_pool2d input must be [H,W,C], got " + shape_string(input.shape()));
  if (window.rows == 0 || window.cols == 0 || stride.rows == 0 || stride.cols == 0) {
    throw StructuralError("max_pool2d window and stride must be positive");
  }
  const std::size_t h = input.extent(0), w = input.extent(1), c = input.extent(2);
  if (window.rows > h || window.cols > w) {
    throw StructuralError("max_pool2d window " + std::to_string(window.rows) + "x" + std::to_string(window.cols) +
                          " larger than input " + shape_string(input.shape()));
  }
  const std::size_t oh = (h - window.rows) / stride.rows + 1;
  const std::size_t ow = (w - window.cols) / stride.cols + 1;
  PoolResult r{Tensor({oh, ow, c}), std::vector<std::size_t>(oh * ow * c)};
  const float* in = input.raw();
  float* out = r.output.raw();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((oy * stride.rows) * w + ox * stride.cols) * c + ch;
        float best_v = in[best];
        for (std::size_t ky = 0; ky < window.rows; ++ky) {
          for (std::size_t kx = 0; kx < window.cols; ++kx) {
            const std::size_t idx = ((oy * stride.rows + ky) * w + ox * stride.cols + kx) * c + ch;
            if (in[idx] > best_v) {
              best_v = in[idx];
              best = idx;
            }
          }
        }
        const std::size_t o = (oy * ow + ox) * c + ch;
        out[o] = best_v;
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

inline PoolResult max_pool2d(const Tensor& input, PoolWindow window) {
  return max_pool2d(input, window, Stride{window.rows, window.cols});
}

// Routes each upstream value to the input element recorded as its argmax.
inline Tensor max_pool2d_backward(const Shape& input_shape, const std::vector<std::size_t>& argmax,
                                  const Tensor& upstream) {
  if (upstream.size() != argmax.size()) {
    throw StructuralError("max_pool2d_backward: upstream has " + std::to_string(upstream.size()) +
                          " values, argmax has " + std::to_string(argmax.size()));
  }
  Tensor din = Tensor::zeros(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= din.size()) throw StructuralError("max_pool2d_backward: argmax out of range");
    din[argmax[i]] += upstream[i];
  }
  return din;
}

}  // namespace hybil
