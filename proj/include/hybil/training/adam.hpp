#pragma once

#include <cmath>
#include <map>
#include <span>

#include "hybil/numcore/layer.hpp"

namespace hybil {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First and second moments per parameter id, plus the shared step counter.
struct AdamState {
  struct Moments {
    Tensor m_weights, v_weights, m_bias, v_bias;
  };
  AdamConfig config;
  std::map<std::string, Moments> moments;
  std::uint64_t step = 0;
};

namespace detail {

inline void adam_update(Tensor& theta, const Tensor& g, Tensor& m, Tensor& v, const AdamConfig& c, double lr,
                        double correct1, double correct2) {
  float* p = theta.raw();
  const float* gp = g.raw();
  float* mp = m.raw();
  float* vp = v.raw();
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double gi = gp[i];
    const double mi = c.beta1 * mp[i] + (1.0 - c.beta1) * gi;
    const double vi = c.beta2 * vp[i] + (1.0 - c.beta2) * gi * gi;
    mp[i] = static_cast<float>(mi);
    vp[i] = static_cast<float>(vi);
    const double m_hat = mi / correct1;
    const double v_hat = vi / correct2;
    p[i] = static_cast<float>(p[i] - lr * m_hat / (std::sqrt(v_hat) + c.epsilon));
  }
}

}  // namespace detail

// One bias-corrected Adam step over `params`. A parameter without an entry in
// `grads` is treated as having a zero gradient. Non-finite gradients reject the
// whole step before anything is modified.
inline void adam_step(std::span<LayerParams* const> params, const Gradients& grads, AdamState& state, double lr) {
  if (!(lr > 0.0)) throw ConfigError("adam: learning rate must be positive");
  for (const LayerParams* p : params) {
    auto it = grads.find(p->id);
    if (it == grads.end()) continue;
    it->second.weights.require_same_shape(p->weights, "adam");
    it->second.bias.require_same_shape(p->bias, "adam");
    if (!it->second.weights.all_finite() || !it->second.bias.all_finite()) {
      throw NumericError("adam: non-finite gradient for '" + p->id + "', step rejected");
    }
  }
  ++state.step;
  const auto& c = state.config;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (LayerParams* p : params) {
    auto [slot, fresh] = state.moments.try_emplace(p->id);
    auto& mo = slot->second;
    if (fresh) {
      mo = {Tensor::zeros(p->weights.shape()), Tensor::zeros(p->weights.shape()), Tensor::zeros(p->bias.shape()),
            Tensor::zeros(p->bias.shape())};
    }
    auto it = grads.find(p->id);
    const LayerGrads g = it != grads.end() ? it->second : LayerGrads::zeros_like(*p);
    detail::adam_update(p->weights, g.weights, mo.m_weights, mo.v_weights, c, lr, correct1, correct2);
    detail::adam_update(p->bias, g.bias, mo.m_bias, mo.v_bias, c, lr, correct1, correct2);
  }
}

}  // namespace hybil
