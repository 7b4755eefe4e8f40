#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "hybil/core/tensor.hpp"

namespace hybil {

// Max-subtracted softmax; accumulation in double.
inline Tensor softmax(const Tensor& logits) {
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  double mx = logits[0];
  for (float v : logits.data()) mx = std::max<double>(mx, v);
  double z = 0.0;
  for (float v : logits.data()) z += std::exp(static_cast<double>(v) - mx);
  Tensor p(logits.shape());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = static_cast<float>(std::exp(static_cast<double>(logits[i]) - mx) / z);
  }
  return p;
}

struct LossResult {
  double loss = 0.0;
  Tensor dlogits;
};

// Class-weighted categorical cross-entropy on raw logits:
//   loss    = -w * log softmax(logits)[target]
//   dlogits =  w * (softmax(logits) - onehot(target))
inline LossResult softmax_cross_entropy(const Tensor& logits, std::size_t target, double class_weight = 1.0) {
  const std::size_t k = logits.size();
  if (k < 2) throw StructuralError("softmax_cross_entropy needs at least 2 classes");
  if (target >= k) {
    throw StructuralError("softmax_cross_entropy: target " + std::to_string(target) + " out of range for " +
                          std::to_string(k) + " classes");
  }
  if (!(class_weight > 0.0)) throw ConfigError("softmax_cross_entropy: class weight must be positive");
  if (!logits.all_finite()) throw NumericError("softmax_cross_entropy: non-finite logits");

  double mx = logits[0];
  for (float v : logits.data()) mx = std::max<double>(mx, v);
  double z = 0.0;
  for (float v : logits.data()) z += std::exp(static_cast<double>(v) - mx);
  const double log_z = std::log(z);

  LossResult r;
  r.loss = class_weight * (log_z - (static_cast<double>(logits[target]) - mx));
  r.dlogits = Tensor(logits.shape());
  for (std::size_t i = 0; i < k; ++i) {
    const double p = std::exp(static_cast<double>(logits[i]) - mx - log_z);
    r.dlogits[i] = static_cast<float>(class_weight * (p - (i == target ? 1.0 : 0.0)));
  }
  return r;
}

inline std::size_t argmax(const Tensor& t) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] > t[best]) best = i;
  }
  return best;
}

}  // namespace hybil
