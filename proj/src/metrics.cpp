#include "respscreen/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "respscreen/errors.hpp"

namespace respscreen::evaluate {

namespace {

void check(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw std::invalid_argument("scores and labels differ in length");
  const bool pos = std::find(labels.begin(), labels.end(), 1) != labels.end();
  const bool neg = std::find(labels.begin(), labels.end(), 0) != labels.end();
  if (!pos || !neg) throw SingleClass("metric needs both classes");
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
  check(scores, labels);
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of mid-ranks of the positives (Mann-Whitney U).
  long double rank_sum = 0.0L;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const long double mid = (static_cast<long double>(i) + static_cast<long double>(j - 1)) / 2.0L + 1.0L;
    for (std::size_t t = i; t < j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum += mid;
        ++n_pos;
      }
    }
    i = j;
  }
  const auto np = static_cast<long double>(n_pos);
  const auto nn = static_cast<long double>(n - n_pos);
  return static_cast<double>((rank_sum - np * (np + 1.0L) / 2.0L) / (np * nn));
}

PrecisionRecall precision_recall(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check(scores, labels);
  PrecisionRecall pr;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++pr.tp;
    else if (predicted) ++pr.fp;
    else if (actual) ++pr.fn;
    else ++pr.tn;
  }
  if (pr.tp + pr.fp == 0) {
    pr.precision_undefined = true;
  } else {
    pr.precision = static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fp);
  }
  pr.recall = static_cast<double>(pr.tp) / static_cast<double>(pr.tp + pr.fn);
  return pr;
}

}  // namespace respscreen::evaluate
