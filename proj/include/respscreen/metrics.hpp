#pragma once

#include <cstddef>
#include <span>

namespace respscreen::evaluate {

/// Probability that a random positive outranks a random negative, ties
/// counting one half. Labels are 0/1. Throws SingleClass.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
  bool precision_undefined = false;  // no predicted positives; precision reported as 0
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
};

/// Predicts positive when score >= threshold. Throws SingleClass.
PrecisionRecall precision_recall(std::span<const double> scores, std::span<const int> labels, double threshold);

}  // namespace respscreen::evaluate
