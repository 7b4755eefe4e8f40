#pragma once

#include <span>

#include "hybil/core/error.hpp"

namespace hybil {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based; 0 marks an evaluation before any update
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_f1 = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct StopDecision {
  bool stop = false;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

// Best = first epoch with the lowest validation loss (improvement is strict).
// Stop once the latest epoch is `patience` or more epochs past the best.
inline StopDecision early_stop_check(std::span<const EpochRecord> history, std::size_t patience) {
  if (history.empty()) throw ConfigError("early_stop_check: empty history");
  StopDecision d{false, history.front().epoch, history.front().val_loss};
  for (const auto& r : history.subspan(1)) {
    if (r.val_loss < d.best_val_loss) {
      d.best_val_loss = r.val_loss;
      d.best_epoch = r.epoch;
    }
  }
  d.stop = history.back().epoch - d.best_epoch >= patience;
  return d;
}

}  // namespace hybil
