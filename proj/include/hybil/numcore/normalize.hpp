#pragma once

#include <algorithm>
#include <cmath>

#include "hybil/core/tensor.hpp"

namespace hybil {

inline constexpr float kNormEpsilon = 1e-8f;
// Below this magnitude the signed-sqrt derivative is frozen at its value here.
inline constexpr float kSignedSqrtClamp = 1e-6f;

inline Tensor signed_sqrt(Tensor v) {
  for (auto& x : v.data()) x = std::copysign(std::sqrt(std::fabs(x)), x);
  return v;
}

inline Tensor signed_sqrt_backward(const Tensor& input, Tensor upstream) {
  input.require_same_shape(upstream, "signed_sqrt_backward");
  auto g = upstream.data();
  auto x = input.data();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const float a = std::max(std::fabs(x[i]), kSignedSqrtClamp);
    g[i] *= 0.5f / std::sqrt(a);
  }
  return upstream;
}

namespace detail {

inline double l2_norm(const Tensor& v) {
  double s = 0.0;
  for (float x : v.data()) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

}  // namespace detail

// v / (||v||_2 + eps)
inline Tensor l2_normalize(Tensor v) {
  const double denom = detail::l2_norm(v) + kNormEpsilon;
  for (auto& x : v.data()) x = static_cast<float>(x / denom);
  return v;
}

// d/dv of v/(n+eps) applied to g:  g/(n+eps) - v (v.g) / (n (n+eps)^2)
inline Tensor l2_normalize_backward(const Tensor& input, Tensor upstream) {
  input.require_same_shape(upstream, "l2_normalize_backward");
  const double n = detail::l2_norm(input);
  const double d = n + kNormEpsilon;
  double vg = 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) vg += static_cast<double>(input[i]) * upstream[i];
  const double coeff = n > 0.0 ? vg / (n * d * d) : 0.0;
  for (std::size_t i = 0; i < input.size(); ++i) {
    upstream[i] = static_cast<float>(upstream[i] / d - input[i] * coeff);
  }
  return upstream;
}

}  // namespace hybil
