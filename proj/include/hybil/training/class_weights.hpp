#pragma once

#include <span>
#include <vector>

#include "hybil/core/error.hpp"

namespace hybil {

struct ClassWeights {
  std::vector<double> weights;            // per class id
  std::vector<std::size_t> unrepresented;  // classes with zero count, weight 0
};

// weight_c = T / (K * count_c), T the total count and K the number of
// represented classes, so the average weight per training sample is 1.
inline ClassWeights compute_class_weights(std::span<const std::size_t> counts) {
  std::size_t total = 0, represented = 0;
  for (auto c : counts) {
    total += c;
    represented += c > 0;
  }
  if (total == 0) throw ConfigError("class weights: every class count is zero");
  ClassWeights w;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (counts[k] == 0) {
      w.weights.push_back(0.0);
      w.unrepresented.push_back(k);
    } else {
      w.weights.push_back(static_cast<double>(total) /
                          (static_cast<double>(represented) * static_cast<double>(counts[k])));
    }
  }
  return w;
}

}  // namespace hybil
