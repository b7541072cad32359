#include "sceneparse/metrics.hpp"

#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sceneparse {

ConfusionMatrix::ConfusionMatrix(int n_classes) : n_classes_(n_classes) {
  if (n_classes < 1) throw std::invalid_argument("ConfusionMatrix: need at least one class");
  counts_.assign(static_cast<std::size_t>(n_classes) * n_classes, 0);
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

void ConfusionMatrix::add(const LabelMap& predicted, const LabelMap& truth) {
  if (predicted.height() != truth.height() || predicted.width() != truth.width()) {
    throw std::invalid_argument("evaluate: prediction is " + std::to_string(predicted.height()) + "x" +
                                std::to_string(predicted.width()) + " but truth is " +
                                std::to_string(truth.height()) + "x" + std::to_string(truth.width()));
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const int t = truth[i];
    if (t == LabelMap::kVoid) continue;
    const int p = predicted[i];
    if (t >= n_classes_ || p >= n_classes_) {
      throw std::out_of_range("evaluate: label " + std::to_string(t >= n_classes_ ? t : p) +
                              " outside " + std::to_string(n_classes_) + " classes");
    }
    ++counts_[static_cast<std::size_t>(t) * n_classes_ + p];
  }
}

Metrics metrics_from(const ConfusionMatrix& confusion) {
  Metrics m;
  const int n = confusion.n_classes();
  std::uint64_t correct = 0;
  m.per_class_recall.assign(n, std::numeric_limits<double>::quiet_NaN());
  double recall_sum = 0.0;
  int present = 0;
  for (int t = 0; t < n; ++t) {
    std::uint64_t row = 0;
    for (int p = 0; p < n; ++p) row += confusion.at(t, p);
    correct += confusion.at(t, t);
    m.valid_pixels += row;
    if (row == 0) continue;
    m.per_class_recall[t] = static_cast<double>(confusion.at(t, t)) / static_cast<double>(row);
    recall_sum += m.per_class_recall[t];
    ++present;
  }
  if (m.valid_pixels == 0) throw std::invalid_argument("evaluate: no valid pixels");
  m.pixel_accuracy = static_cast<double>(correct) / static_cast<double>(m.valid_pixels);
  m.class_accuracy = recall_sum / present;
  return m;
}

Metrics evaluate(const LabelMap& predicted, const LabelMap& truth, int n_classes) {
  ConfusionMatrix cm(n_classes);
  cm.add(predicted, truth);
  return metrics_from(cm);
}

}  // namespace sceneparse
