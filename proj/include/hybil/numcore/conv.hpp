#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hybil/numcore/layer.hpp"

namespace hybil {

enum class Padding { same, valid };

struct Stride {
  std::size_t rows = 1;
  std::size_t cols = 1;
};

struct ConvGeometry {
  std::size_t in_h, in_w, in_c;
  std::size_t k_h, k_w, out_c;
  std::size_t out_h, out_w;
  std::size_t pad_top, pad_left;
  Stride stride;
};

namespace detail {

inline std::size_t same_padding_total(std::size_t in, std::size_t k, std::size_t s) {
  const std::size_t out = (in + s - 1) / s;
  const std::size_t needed = (out - 1) * s + k;
  return needed > in ? needed - in : 0;
}

}  // namespace detail

// Validates shapes and derives the output extents. Same padding follows the
// usual convention: total pad split with the extra row/column at the end.
inline ConvGeometry conv_geometry(const Tensor& input, const LayerParams& params, Stride stride,
                                  Padding padding) {
  if (input.rank() != 3) throw StructuralError("conv2d input must be [H,W,C], got " + shape_string(input.shape()));
  if (params.weights.rank() != 4) {
    throw StructuralError("conv2d kernel must be [kh,kw,Cin,Cout], got " + shape_string(params.weights.shape()));
  }
  if (stride.rows == 0 || stride.cols == 0) throw StructuralError("conv2d stride must be positive");
  ConvGeometry g{};
  g.in_h = input.extent(0);
  g.in_w = input.extent(1);
  g.in_c = input.extent(2);
  g.k_h = params.weights.extent(0);
  g.k_w = params.weights.extent(1);
  g.out_c = params.weights.extent(3);
  g.stride = stride;
  if (params.weights.extent(2) != g.in_c) {
    throw StructuralError("conv2d '" + params.id + "': input has " + std::to_string(g.in_c) +
                          " channels, kernel expects " + std::to_string(params.weights.extent(2)));
  }
  if (params.bias.shape() != Shape{g.out_c}) {
    throw StructuralError("conv2d '" + params.id + "': bias must be [" + std::to_string(g.out_c) + "]");
  }
  std::size_t pad_h = 0, pad_w = 0;
  if (padding == Padding::same) {
    pad_h = detail::same_padding_total(g.in_h, g.k_h, stride.rows);
    pad_w = detail::same_padding_total(g.in_w, g.k_w, stride.cols);
  }
  g.pad_top = pad_h / 2;
  g.pad_left = pad_w / 2;
  const std::size_t hp = g.in_h + pad_h;
  const std::size_t wp = g.in_w + pad_w;
  if (g.k_h > hp || g.k_w > wp) {
    throw StructuralError("conv2d '" + params.id + "': kernel larger than padded input");
  }
  g.out_h = (hp - g.k_h) / stride.rows + 1;
  g.out_w = (wp - g.k_w) / stride.cols + 1;
  return g;
}

namespace detail {

// out[0..B) += sum_j col[j] * w[j*stride + 0..B), with the block held in registers.
template <std::size_t B>
void accumulate_block(const float* col, std::size_t row, const float* w, std::size_t stride, float* out) {
  float acc[B] = {};
  for (std::size_t j = 0; j < row; ++j) {
    const float v = col[j];
    const float* wr = w + j * stride;
    for (std::size_t c = 0; c < B; ++c) acc[c] += v * wr[c];
  }
  for (std::size_t c = 0; c < B; ++c) out[c] += acc[c];
}

// Gathers the receptive field of one output pixel into col (zero outside the
// input) and records the input offset of each tap, -1 when outside.
inline void gather_patch(const ConvGeometry& g, const float* in, std::size_t oy, std::size_t ox, float* col,
                         std::ptrdiff_t* offset) {
  const std::size_t cin = g.in_c;
  for (std::size_t ky = 0; ky < g.k_h; ++ky) {
    const auto iy = static_cast<std::ptrdiff_t>(oy * g.stride.rows + ky) - static_cast<std::ptrdiff_t>(g.pad_top);
    for (std::size_t kx = 0; kx < g.k_w; ++kx) {
      const auto ix = static_cast<std::ptrdiff_t>(ox * g.stride.cols + kx) - static_cast<std::ptrdiff_t>(g.pad_left);
      const bool inside = iy >= 0 && iy < static_cast<std::ptrdiff_t>(g.in_h) && ix >= 0 &&
                          ix < static_cast<std::ptrdiff_t>(g.in_w);
      const std::size_t k = ky * g.k_w + kx;
      offset[k] = inside ? (iy * static_cast<std::ptrdiff_t>(g.in_w) + ix) * static_cast<std::ptrdiff_t>(cin) : -1;
      float* c = col + k * cin;
      if (inside) {
        std::copy(in + offset[k], in + offset[k] + cin, c);
      } else {
        std::fill(c, c + cin, 0.0f);
      }
    }
  }
}

}  // namespace detail

// Cross-correlation (no kernel flip). input [H,W,Cin], weights [kh,kw,Cin,Cout].
inline Tensor conv2d(const Tensor& input, const LayerParams& params, Stride stride = {},
                     Padding padding = Padding::same) {
  const auto g = conv_geometry(input, params, stride, padding);
  Tensor out({g.out_h, g.out_w, g.out_c});
  const std::size_t cout = g.out_c;
  const std::size_t row = g.k_h * g.k_w * g.in_c;
  std::vector<float> col(row);
  std::vector<std::ptrdiff_t> offset(g.k_h * g.k_w);
  const float* w = params.weights.raw();
  const float* b = params.bias.raw();
  float* o = out.raw();
  // The kernel viewed as [kh*kw*Cin, Cout]; output channels go in register blocks.
  constexpr std::size_t kBlock = 16;
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      detail::gather_patch(g, input.raw(), oy, ox, col.data(), offset.data());
      float* op = o + (oy * g.out_w + ox) * cout;
      std::copy(b, b + cout, op);
      std::size_t co = 0;
      for (; co + kBlock <= cout; co += kBlock) detail::accumulate_block<kBlock>(col.data(), row, w + co, cout, op + co);
      for (; co + 4 <= cout; co += 4) detail::accumulate_block<4>(col.data(), row, w + co, cout, op + co);
      for (; co < cout; ++co) detail::accumulate_block<1>(col.data(), row, w + co, cout, op + co);
    }
  }
  return out;
}

inline GradBundle conv2d_backward(const Tensor& input, const LayerParams& params, const Tensor& upstream,
                                  Stride stride = {}, Padding padding = Padding::same) {
  const auto g = conv_geometry(input, params, stride, padding);
  if (upstream.shape() != Shape{g.out_h, g.out_w, g.out_c}) {
    throw StructuralError("conv2d_backward '" + params.id + "': upstream " + shape_string(upstream.shape()) +
                          " does not match output " + shape_string({g.out_h, g.out_w, g.out_c}));
  }
  const std::size_t cin = g.in_c;
  const std::size_t cout = g.out_c;
  LayerGrads pg = LayerGrads::zeros_like(params);
  Tensor din = Tensor::zeros(input.shape());

  // Per output pixel the receptive field is gathered into a row of kh*kw*Cin
  // values, so both products run over long contiguous rows:
  // dW[j,:] += col[j]*g and dcol += g[co]*Wt[co,:], with the kernel
  // transposed to [Cout, kh*kw*Cin].
  const std::size_t taps = g.k_h * g.k_w;
  const std::size_t row = taps * cin;
  std::vector<float> wt(params.weights.size());
  {
    const float* w = params.weights.raw();
    for (std::size_t j = 0; j < row; ++j) {
      for (std::size_t co = 0; co < cout; ++co) wt[co * row + j] = w[j * cout + co];
    }
  }
  std::vector<float> col(row), dcol(row);
  std::vector<std::ptrdiff_t> offset(taps);

  const float* in = input.raw();
  const float* up = upstream.raw();
  float* dw = pg.weights.raw();
  float* db = pg.bias.raw();
  float* di = din.raw();
  for (std::size_t oy = 0; oy < g.out_h; ++oy) {
    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
      const float* gp = up + (oy * g.out_w + ox) * cout;
      for (std::size_t co = 0; co < cout; ++co) db[co] += gp[co];
      detail::gather_patch(g, in, oy, ox, col.data(), offset.data());
      for (std::size_t j = 0; j < row; ++j) {
        const float v = col[j];
        float* dwr = dw + j * cout;
        for (std::size_t co = 0; co < cout; ++co) dwr[co] += v * gp[co];
      }
      std::fill(dcol.begin(), dcol.end(), 0.0f);
      for (std::size_t co = 0; co < cout; ++co) {
        const float gv = gp[co];
        const float* wr = wt.data() + co * row;
        for (std::size_t j = 0; j < row; ++j) dcol[j] += gv * wr[j];
      }
      for (std::size_t k = 0; k < taps; ++k) {
        if (offset[k] < 0) continue;
        float* d = di + offset[k];
        const float* src = dcol.data() + k * cin;
        for (std::size_t ci = 0; ci < cin; ++ci) d[ci] += src[ci];
      }
    }
  }
  GradBundle out;
  out.params.emplace(params.id, std::move(pg));
  out.input = std::move(din);
  return out;
}

}  // namespace hybil
