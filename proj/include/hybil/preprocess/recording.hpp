#pragma once

#include <set>
#include <string>
#include <vector>

#include "hybil/core/tensor.hpp"
#include "hybil/dataio/manifest.hpp"

namespace hybil {

// Multi-channel EEG: data is [channels, samples].
struct Recording {
  std::string id;
  std::vector<std::string> channels;
  double sample_rate = 0.0;
  Tensor data;
  std::vector<Annotation> annotations;
  std::string patient_id;
  std::string event_id;

  std::size_t samples() const { return data.rank() == 2 ? data.extent(1) : 0; }
  double duration() const { return static_cast<double>(samples()) / sample_rate; }

  void validate() const {
    if (!(sample_rate > 0.0)) throw IngestionError(id + ": sample rate must be positive");
    if (data.rank() != 2 || data.extent(0) != channels.size()) {
      throw IngestionError(id + ": data " + shape_string(data.shape()) + " does not match " +
                           std::to_string(channels.size()) + " channel labels");
    }
    std::set<std::string> seen;
    for (const auto& c : channels) {
      if (!seen.insert(c).second) throw IngestionError(id + ": duplicate channel label " + c);
    }
    for (const auto& a : annotations) {
      if (!(a.start >= 0.0 && a.start < a.end && a.end <= duration() + 1e-9)) {
        throw IngestionError(id + ": annotation [" + std::to_string(a.start) + ", " + std::to_string(a.end) +
                             "] outside recording of " + std::to_string(duration()) + " s");
      }
    }
  }
};

}  // namespace hybil
