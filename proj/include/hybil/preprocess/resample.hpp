#pragma once

#include <cmath>
#include <numbers>

#include "hybil/preprocess/recording.hpp"

namespace hybil {

struct ResampleKernel {
  std::size_t taps_per_side = 16;
  double kaiser_beta = 8.0;
};

namespace detail {

inline double sinc(double x) {
  if (std::fabs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace detail

// Band-limited resampling by a Kaiser-windowed sinc. Each output sample at
// input position t = j * src/target takes 2 * taps_per_side input samples
// around t; the low-pass cutoff is min(1, target/src) of the input Nyquist.
// Taps are normalized to unit sum and indices clamped at the edges, so a
// constant signal stays exactly constant.
inline Recording resample(const Recording& rec, double target, ResampleKernel kernel = {}) {
  if (!(target > 0.0)) throw ConfigError("resample target rate must be positive, got " + std::to_string(target));
  if (!(rec.sample_rate > 0.0)) throw ConfigError(rec.id + ": source sample rate must be positive");
  if (rec.sample_rate == target) return rec;

  const std::size_t channels = rec.data.extent(0), n_in = rec.samples();
  const double ratio = target / rec.sample_rate;
  const auto n_out = static_cast<std::size_t>(std::max(1.0, std::round(static_cast<double>(n_in) * ratio)));
  const double cutoff = std::min(1.0, ratio);
  const auto half = static_cast<long>(kernel.taps_per_side);
  const double i0_beta = std::cyl_bessel_i(0.0, kernel.kaiser_beta);

  Recording out = rec;
  out.sample_rate = target;
  out.data = Tensor({channels, n_out});
  std::vector<double> w(2 * kernel.taps_per_side);
  std::vector<std::size_t> idx(w.size());
  for (std::size_t j = 0; j < n_out; ++j) {
    const double t = static_cast<double>(j) / ratio;
    const long base = static_cast<long>(std::floor(t)) - half + 1;
    double sum = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
      const long pos = base + static_cast<long>(k);
      const double d = t - static_cast<double>(pos);
      const double r = d / static_cast<double>(half);
      const double win = std::fabs(r) < 1.0 ? std::cyl_bessel_i(0.0, kernel.kaiser_beta * std::sqrt(1.0 - r * r)) / i0_beta : 0.0;
      w[k] = cutoff * detail::sinc(cutoff * d) * win;
      sum += w[k];
      idx[k] = static_cast<std::size_t>(std::clamp(pos, 0L, static_cast<long>(n_in) - 1));
    }
    for (auto& v : w) v /= sum;
    for (std::size_t c = 0; c < channels; ++c) {
      const float* src = rec.data.raw() + c * n_in;
      double acc = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) acc += w[k] * src[idx[k]];
      out.data.raw()[c * n_out + j] = static_cast<float>(acc);
    }
  }
  return out;
}

}  // namespace hybil
