#pragma once

#include <string>
#include <vector>

#include "hybil/core/tensor.hpp"
#include "hybil/dataio/schema.hpp"
#include "hybil/models/feature_map.hpp"

namespace hybil {

struct Provenance {
  std::string recording;
  std::string event;
  double start = 0.0;  // s, window start within the recording

  bool operator==(const Provenance&) const = default;
};

// One [32, 9, 19] log-spectrogram sample.
struct SpectroSample {
  Tensor features;
  std::size_t label = 0;
  Provenance provenance;

  bool operator==(const SpectroSample&) const = default;
};

struct Dataset {
  LabelSchema schema;
  std::vector<SpectroSample> samples;

  std::size_t size() const noexcept { return samples.size(); }

  std::vector<std::size_t> labels() const {
    std::vector<std::size_t> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.label);
    return out;
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(schema.size(), 0);
    for (const auto& s : samples) ++counts.at(s.label);
    return counts;
  }

  void validate() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      if (s.features.shape() != kSampleShape) {
        throw StructuralError("sample " + std::to_string(i) + " has shape " + shape_string(s.features.shape()));
      }
      if (!s.features.all_finite()) throw NumericError("sample " + std::to_string(i) + " has non-finite values");
      if (s.label >= schema.size()) {
        throw SchemaError("sample " + std::to_string(i) + " label " + std::to_string(s.label) + " outside schema " +
                          schema.name());
      }
    }
  }
};

}  // namespace hybil
