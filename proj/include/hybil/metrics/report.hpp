#pragma once

#include "hybil/metrics/confusion.hpp"

namespace hybil {

struct ClassScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;  // true samples of the class
  // Set when the corresponding denominator was zero and 0 was reported.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
};

struct ClassReport {
  std::vector<ClassScore> classes;
  double weighted_f1 = 0.0;
  double macro_f1 = 0.0;  // over classes that occur in truth or predictions
  double accuracy = 0.0;
  std::uint64_t total = 0;
};

inline ClassReport class_report(const ConfusionMatrix& cm) {
  if (cm.classes() == 0) throw StructuralError("class_report: empty confusion matrix");
  ClassReport r;
  r.total = cm.total();
  std::uint64_t correct = 0, supported = 0;
  std::size_t present = 0;
  double weighted = 0.0, macro = 0.0;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const std::uint64_t tp = cm.at(c, c), row = cm.row_sum(c), col = cm.col_sum(c);
    ClassScore s;
    s.support = row;
    s.precision_undefined = col == 0;
    s.recall_undefined = row == 0;
    s.precision = col ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
    s.recall = row ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
    // 2tp / (2tp + fp + fn), the harmonic mean of precision and recall.
    const std::uint64_t denom = row + col;
    s.f1_undefined = denom == 0;
    s.f1 = denom ? 2.0 * static_cast<double>(tp) / static_cast<double>(denom) : 0.0;
    correct += tp;
    supported += row;
    weighted += static_cast<double>(row) * s.f1;
    if (denom) {
      macro += s.f1;
      ++present;
    }
    r.classes.push_back(s);
  }
  r.weighted_f1 = supported ? weighted / static_cast<double>(supported) : 0.0;
  r.macro_f1 = present ? macro / static_cast<double>(present) : 0.0;
  r.accuracy = r.total ? static_cast<double>(correct) / static_cast<double>(r.total) : 0.0;
  return r;
}

struct ClassAccuracy {
  std::vector<double> recall;
  std::vector<bool> undefined;  // class has no true samples
};

inline ClassAccuracy per_class_accuracy(const ConfusionMatrix& cm) {
  if (cm.classes() == 0) throw StructuralError("per_class_accuracy: empty confusion matrix");
  ClassAccuracy out;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    const auto row = cm.row_sum(c);
    out.recall.push_back(row ? static_cast<double>(cm.at(c, c)) / static_cast<double>(row) : 0.0);
    out.undefined.push_back(row == 0);
  }
  return out;
}

}  // namespace hybil
