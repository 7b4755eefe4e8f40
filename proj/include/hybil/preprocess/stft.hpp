#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <vector>

#include "hybil/core/tensor.hpp"
#include "hybil/preprocess/segment.hpp"

namespace hybil {

struct StftConfig {
  std::size_t fft_size = 64;
  double overlap = 0.5;
  double log_floor = 1e-8;
  double target_rate = kTargetRate;
  std::size_t frames = 9;
  std::size_t freq_bins = 32;

  std::size_t hop() const { return static_cast<std::size_t>(std::llround(static_cast<double>(fft_size) * (1.0 - overlap))); }
  std::size_t window_samples() const { return static_cast<std::size_t>(std::llround(target_rate)); }
  // Zero-padded length that yields exactly `frames` frames.
  std::size_t padded_length() const { return (frames - 1) * hop() + fft_size; }

  void validate() const {
    if (fft_size < 2) throw ConfigError("stft.fft_size must be at least 2");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("stft.overlap must lie in [0, 1)");
    if (hop() == 0) throw ConfigError("stft.overlap leaves a zero hop");
    if (!(log_floor > 0.0)) throw ConfigError("stft.log_floor must be positive");
    if (!(target_rate > 0.0)) throw ConfigError("stft.target_rate must be positive");
    if (frames == 0) throw ConfigError("stft.frames must be positive");
    if (freq_bins == 0 || freq_bins > fft_size / 2 + 1) {
      throw ConfigError("stft.freq_bins must lie in [1, fft_size/2 + 1]");
    }
    if (padded_length() < window_samples()) {
      throw ConfigError("stft: " + std::to_string(frames) + " frames cover only " + std::to_string(padded_length()) +
                        " samples, window has " + std::to_string(window_samples()));
    }
  }

  bool operator==(const StftConfig&) const = default;
};

// Periodic Hann window.
inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n)));
  }
  return w;
}

// Real-input FFT of a fixed size. Plans are created once per size under a lock
// (FFTW planning is not thread-safe); executing a plan on caller buffers is.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                 FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_) throw ConfigError("cannot plan FFT of size " + std::to_string(n));
  }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;
  ~RealFft() { fftw_destroy_plan(plan_); }

  static const RealFft& of_size(std::size_t n) {
    static std::mutex mu;
    static std::map<std::size_t, std::unique_ptr<RealFft>> cache;
    std::lock_guard lock(mu);
    auto& slot = cache[n];
    if (!slot) slot = std::make_unique<RealFft>(n);
    return *slot;
  }

  // Bins 0..n/2 of the DFT of `frame` (frame.size() == n).
  std::vector<std::complex<double>> forward(std::vector<double> frame) const {
    // std::complex<double> is layout-compatible with fftw_complex.
    std::vector<std::complex<double>> bins(n_ / 2 + 1);
    fftw_execute_dft_r2c(plan_, frame.data(), reinterpret_cast<fftw_complex*>(bins.data()));
    return bins;
  }

  std::size_t size() const noexcept { return n_; }

 private:
  std::size_t n_;
  fftw_plan plan_ = nullptr;
};

// All n DFT magnitudes of a windowed frame (the upper half mirrors the lower).
inline std::vector<double> frame_magnitudes(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  const auto half = RealFft::of_size(n).forward(frame);
  std::vector<double> mag(n);
  for (std::size_t k = 0; k < n; ++k) mag[k] = std::abs(half[k <= n / 2 ? k : n - k]);
  return mag;
}

namespace detail {

// [channels, samples] window -> value(|X|) laid out [freq_bins, frames, channels].
// Each channel is zero-padded symmetrically (extra sample on the right) to
// padded_length, cut into frames of fft_size with the configured hop and
// multiplied by a periodic Hann window.
template <class Map>
Tensor stft_map(const Tensor& window, const StftConfig& cfg, Map value) {
  cfg.validate();
  if (window.rank() != 2 || window.extent(1) != cfg.window_samples()) {
    throw StructuralError("stft expects [channels, " + std::to_string(cfg.window_samples()) + "], got " +
                          shape_string(window.shape()));
  }
  const std::size_t channels = window.extent(0), n = window.extent(1), padded = cfg.padded_length();
  const std::size_t left = (padded - n) / 2, hop = cfg.hop(), fft = cfg.fft_size;
  const auto hann = hann_window(fft);
  const auto& plan = RealFft::of_size(fft);
  Tensor out({cfg.freq_bins, cfg.frames, channels});
  std::vector<double> signal(padded), frame(fft);
  for (std::size_t c = 0; c < channels; ++c) {
    std::fill(signal.begin(), signal.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) signal[left + i] = window.raw()[c * n + i];
    for (std::size_t f = 0; f < cfg.frames; ++f) {
      for (std::size_t i = 0; i < fft; ++i) frame[i] = signal[f * hop + i] * hann[i];
      const auto bins = plan.forward(frame);
      for (std::size_t k = 0; k < cfg.freq_bins; ++k) out.at(k, f, c) = static_cast<float>(value(std::abs(bins[k])));
    }
  }
  return out;
}

}  // namespace detail

// Linear magnitudes, shape [freq_bins, frames, channels].
inline Tensor stft_magnitudes(const Tensor& window, const StftConfig& cfg = {}) {
  return detail::stft_map(window, cfg, [](double m) { return m; });
}

// log10(magnitude + floor), shape [freq_bins, frames, channels].
inline Tensor stft_features(const Tensor& window, const StftConfig& cfg = {}) {
  return detail::stft_map(window, cfg, [&](double m) { return std::log10(m + cfg.log_floor); });
}

}  // namespace hybil
