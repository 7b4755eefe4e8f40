#pragma once

#include <string>
#include <utility>

#include "hybil/models/feature_map.hpp"

namespace hybil {

namespace detail {

inline void check_pool_pair(const FeatureMap& a, const FeatureMap& b, const char* who) {
  if (a.locations() != b.locations()) {
    throw StructuralError(std::string(who) + ": location counts differ (" + std::to_string(a.locations()) + " vs " +
                          std::to_string(b.locations()) + ")");
  }
}

}  // namespace detail

// Sum over locations of the outer products a_o b_o^T, flattened row-major:
//   phi[m*N + n] = sum_o A[o,m] * B[o,n]
inline Tensor bilinear_pool(const FeatureMap& a, const FeatureMap& b) {
  detail::check_pool_pair(a, b, "bilinear_pool");
  const std::size_t locs = a.locations(), m_dims = a.dims(), n_dims = b.dims();
  Tensor phi = Tensor::zeros({m_dims * n_dims});
  const float* pa = a.values().raw();
  const float* pb = b.values().raw();
  float* out = phi.raw();
  for (std::size_t o = 0; o < locs; ++o) {
    const float* ar = pa + o * m_dims;
    const float* br = pb + o * n_dims;
    for (std::size_t m = 0; m < m_dims; ++m) {
      const float av = ar[m];
      float* row = out + m * n_dims;
      for (std::size_t n = 0; n < n_dims; ++n) row[n] += av * br[n];
    }
  }
  return phi;
}

// With U the upstream viewed as M x N:  dA_o = U b_o,  dB_o = U^T a_o.
inline std::pair<FeatureMap, FeatureMap> bilinear_pool_backward(const FeatureMap& a, const FeatureMap& b,
                                                                 const Tensor& upstream) {
  detail::check_pool_pair(a, b, "bilinear_pool_backward");
  const std::size_t locs = a.locations(), m_dims = a.dims(), n_dims = b.dims();
  if (upstream.size() != m_dims * n_dims) {
    throw StructuralError("bilinear_pool_backward: upstream length " + std::to_string(upstream.size()) +
                          ", expected " + std::to_string(m_dims * n_dims));
  }
  FeatureMap da(Tensor::zeros(a.values().shape()));
  FeatureMap db(Tensor::zeros(b.values().shape()));
  const float* u = upstream.raw();
  for (std::size_t o = 0; o < locs; ++o) {
    const float* ar = a.values().raw() + o * m_dims;
    const float* br = b.values().raw() + o * n_dims;
    float* dar = da.values().raw() + o * m_dims;
    float* dbr = db.values().raw() + o * n_dims;
    for (std::size_t m = 0; m < m_dims; ++m) {
      const float* ur = u + m * n_dims;
      float acc = 0.0f;
      for (std::size_t n = 0; n < n_dims; ++n) {
        acc += ur[n] * br[n];
        dbr[n] += ur[n] * ar[m];
      }
      dar[m] = acc;
    }
  }
  return {std::move(da), std::move(db)};
}

}  // namespace hybil
