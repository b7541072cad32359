#pragma once

#include <cstdint>
#include <vector>

#include "sceneparse/label_map.hpp"

namespace sceneparse {

/// Counts indexed (truth, predicted). Void truth pixels are never counted.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int n_classes);

  int n_classes() const { return n_classes_; }
  std::uint64_t at(int truth, int predicted) const {
    return counts_[static_cast<std::size_t>(truth) * n_classes_ + predicted];
  }
  std::uint64_t total() const;

  /// Throws on size mismatch or an out-of-range label.
  void add(const LabelMap& predicted, const LabelMap& truth);

 private:
  int n_classes_;
  std::vector<std::uint64_t> counts_;
};

struct Metrics {
  double pixel_accuracy = 0.0;
  /// Mean recall over classes that occur in the truth.
  double class_accuracy = 0.0;
  std::vector<double> per_class_recall;  // NaN for classes absent from the truth
  std::uint64_t valid_pixels = 0;
};

/// Throws std::invalid_argument when there is no valid truth pixel.
Metrics metrics_from(const ConfusionMatrix& confusion);
Metrics evaluate(const LabelMap& predicted, const LabelMap& truth, int n_classes);

}  // namespace sceneparse
