#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sceneparse {

/// Normalized probability vector over the class set.
class ClassDistribution {
 public:
  static constexpr double kSumTolerance = 1e-9;

  ClassDistribution() = default;
  /// Throws std::invalid_argument unless every entry is in [0,1] and they sum to 1.
  explicit ClassDistribution(std::vector<double> probs);

  static ClassDistribution uniform(int n_classes);
  static ClassDistribution one_hot(int n_classes, int cls);
  /// Normalizes a histogram of non-negative counts; throws if the total is zero.
  static ClassDistribution from_counts(std::span<const double> counts);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  /// Index of the largest entry; ties resolve to the lowest index.
  int argmax() const;

  friend bool operator==(const ClassDistribution&, const ClassDistribution&) = default;

 private:
  struct Unchecked {};
  ClassDistribution(std::vector<double> probs, Unchecked) : probs_(std::move(probs)) {}
  friend ClassDistribution softmax(std::span<const double> logits);

  std::vector<double> probs_;
};

}  // namespace sceneparse
