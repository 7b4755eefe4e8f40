#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hybil/core/error.hpp"

namespace hybil {

// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

  std::size_t classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_.at(truth * k_ + pred); }
  void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1) {
    if (truth >= k_ || pred >= k_) {
      throw StructuralError("confusion: label pair (" + std::to_string(truth) + ", " + std::to_string(pred) +
                            ") outside " + std::to_string(k_) + " classes");
    }
    counts_[truth * k_ + pred] += n;
  }

  std::uint64_t row_sum(std::size_t truth) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < k_; ++p) s += at(truth, p);
    return s;
  }
  std::uint64_t col_sum(std::size_t pred) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < k_; ++t) s += at(t, pred);
    return s;
  }
  std::uint64_t total() const {
    std::uint64_t s = 0;
    for (auto c : counts_) s += c;
    return s;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& other) {
    if (other.k_ != k_) throw StructuralError("confusion: cannot add matrices of different sizes");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
  }

  bool operator==(const ConfusionMatrix&) const = default;

 private:
  std::size_t k_ = 0;
  std::vector<std::uint64_t> counts_;
};

inline ConfusionMatrix confusion(std::span<const std::size_t> truth, std::span<const std::size_t> pred,
                                 std::size_t k) {
  if (truth.size() != pred.size()) {
    throw StructuralError("confusion: " + std::to_string(truth.size()) + " true labels but " +
                          std::to_string(pred.size()) + " predictions");
  }
  ConfusionMatrix cm(k);
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

}  // namespace hybil
