#pragma once

#include <cmath>

#include "hybil/preprocess/recording.hpp"
#include "hybil/preprocess/sample.hpp"

namespace hybil {

inline constexpr double kTargetRate = 250.0;

struct Window {
  Tensor data;  // [channels, rate * 1 s]
  std::size_t label = 0;
  Provenance provenance;
};

inline std::string event_id_for(const Recording& rec, std::size_t annotation) {
  return annotation == 0 ? rec.event_id : rec.event_id + "/" + std::to_string(annotation);
}

// Non-overlapping 1 s windows lying entirely inside each annotation.
inline std::vector<Window> segment(const Recording& rec, double rate = kTargetRate) {
  if (rec.sample_rate != rate) {
    throw IngestionError(rec.id + ": segment expects " + format_real(rate) + " Hz, got " + format_real(rec.sample_rate));
  }
  const auto width = static_cast<std::size_t>(std::llround(rate));
  const std::size_t channels = rec.data.extent(0), n = rec.samples();
  std::vector<Window> out;
  for (std::size_t a = 0; a < rec.annotations.size(); ++a) {
    const auto& ann = rec.annotations[a];
    // Sample-index bounds; the small slack absorbs decimal round-off in the times.
    const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(ann.start * rate - 1e-6)));
    const auto last = std::min(n, static_cast<std::size_t>(std::max(0.0, std::floor(ann.end * rate + 1e-6))));
    for (std::size_t s = first; s + width <= last; s += width) {
      Window w{Tensor({channels, width}), ann.label,
               {rec.id, event_id_for(rec, a), static_cast<double>(s) / rate}};
      for (std::size_t c = 0; c < channels; ++c) {
        const float* src = rec.data.raw() + c * n + s;
        std::copy(src, src + width, w.data.raw() + c * width);
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

}  // namespace hybil
