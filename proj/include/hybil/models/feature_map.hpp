#pragma once

#include <cstddef>

#include "hybil/core/tensor.hpp"

namespace hybil {

// Fixed input geometry of one spectro sample: (frequency, time, channel).
inline constexpr std::size_t kFreqBins = 32;
inline constexpr std::size_t kTimeFrames = 9;
inline constexpr std::size_t kChannels = 19;
inline const Shape kSampleShape{kFreqBins, kTimeFrames, kChannels};

// Extractor output grid: 4 x 3 spatial locations.
inline constexpr std::size_t kGridRows = 4;
inline constexpr std::size_t kGridCols = 3;
inline constexpr std::size_t kLocations = kGridRows * kGridCols;

inline void require_sample_shape(const Tensor& sample, const char* who) {
  if (sample.shape() != kSampleShape) {
    throw StructuralError(std::string(who) + ": sample must have shape " + shape_string(kSampleShape) + ", got " +
                          shape_string(sample.shape()));
  }
}

// O locations x D feature dims, row-major over the 4x3 grid.
class FeatureMap {
 public:
  FeatureMap() = default;
  explicit FeatureMap(Tensor values) : values_(std::move(values)) {
    if (values_.rank() != 2) {
      throw StructuralError("feature map must be [locations, dims], got " + shape_string(values_.shape()));
    }
  }

  std::size_t locations() const { return values_.extent(0); }
  std::size_t dims() const { return values_.extent(1); }
  const Tensor& values() const noexcept { return values_; }
  Tensor& values() noexcept { return values_; }

 private:
  Tensor values_;
};

}  // namespace hybil
