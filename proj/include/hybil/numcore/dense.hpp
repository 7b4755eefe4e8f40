#pragma once

#include "hybil/numcore/layer.hpp"

namespace hybil {

namespace detail {

inline void check_dense(const Tensor& input, const LayerParams& params) {
  if (params.weights.rank() != 2) {
    throw StructuralError("dense '" + params.id + "': weights must be [n,m], got " +
                          shape_string(params.weights.shape()));
  }
  if (input.size() != params.weights.extent(0)) {
    throw StructuralError("dense '" + params.id + "': input length " + std::to_string(input.size()) +
                          " does not match " + std::to_string(params.weights.extent(0)) + " weight rows");
  }
  if (params.bias.shape() != Shape{params.weights.extent(1)}) {
    throw StructuralError("dense '" + params.id + "': bias must be [" + std::to_string(params.weights.extent(1)) + "]");
  }
}

}  // namespace detail

// output = input^T W + b. Any input shape is accepted and read as a flat vector.
inline Tensor dense(const Tensor& input, const LayerParams& params) {
  detail::check_dense(input, params);
  const std::size_t n = params.weights.extent(0), m = params.weights.extent(1);
  Tensor out(Shape{m}, params.bias.values());
  const float* w = params.weights.raw();
  float* o = out.raw();
  for (std::size_t i = 0; i < n; ++i) {
    const float v = input[i];
    const float* wr = w + i * m;
    for (std::size_t j = 0; j < m; ++j) o[j] += v * wr[j];
  }
  return out;
}

inline GradBundle dense_backward(const Tensor& input, const LayerParams& params, const Tensor& upstream) {
  detail::check_dense(input, params);
  const std::size_t n = params.weights.extent(0), m = params.weights.extent(1);
  if (upstream.size() != m) {
    throw StructuralError("dense_backward '" + params.id + "': upstream length " + std::to_string(upstream.size()) +
                          ", expected " + std::to_string(m));
  }
  LayerGrads pg{Tensor::zeros(params.weights.shape()), Tensor(Shape{m}, upstream.values())};
  Tensor din = Tensor::zeros(input.shape());
  const float* w = params.weights.raw();
  const float* g = upstream.raw();
  float* dw = pg.weights.raw();
  for (std::size_t i = 0; i < n; ++i) {
    const float v = input[i];
    const float* wr = w + i * m;
    float* dwr = dw + i * m;
    float acc = 0.0f;
    for (std::size_t j = 0; j < m; ++j) {
      dwr[j] = v * g[j];
      acc += wr[j] * g[j];
    }
    din[i] = acc;
  }
  GradBundle out;
  out.params.emplace(params.id, std::move(pg));
  out.input = std::move(din);
  return out;
}

}  // namespace hybil
