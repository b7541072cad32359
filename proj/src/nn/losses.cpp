#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "sceneparse/nn.hpp"

namespace sceneparse {

ClassDistribution::ClassDistribution(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("ClassDistribution: empty");
  double sum = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("ClassDistribution: entry " + std::to_string(p) + " outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw std::invalid_argument("ClassDistribution: entries sum to " + std::to_string(sum));
  }
}

ClassDistribution ClassDistribution::uniform(int n_classes) {
  if (n_classes < 1) throw std::invalid_argument("ClassDistribution::uniform: no classes");
  return ClassDistribution(std::vector<double>(n_classes, 1.0 / n_classes), Unchecked{});
}

ClassDistribution ClassDistribution::one_hot(int n_classes, int cls) {
  if (cls < 0 || cls >= n_classes) throw std::out_of_range("ClassDistribution::one_hot: class out of range");
  std::vector<double> p(n_classes, 0.0);
  p[cls] = 1.0;
  return ClassDistribution(std::move(p), Unchecked{});
}

ClassDistribution ClassDistribution::from_counts(std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw std::invalid_argument("ClassDistribution::from_counts: empty histogram");
  std::vector<double> p(counts.begin(), counts.end());
  for (double& v : p) {
    if (v < 0.0) throw std::invalid_argument("ClassDistribution::from_counts: negative count");
    v /= total;
  }
  return ClassDistribution(std::move(p), Unchecked{});
}

int ClassDistribution::argmax() const {
  return static_cast<int>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

ClassDistribution softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - top);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return ClassDistribution(std::move(p), ClassDistribution::Unchecked{});
}

double cross_entropy(const ClassDistribution& pred, const ClassDistribution& target) {
  if (pred.size() != target.size()) throw std::invalid_argument("cross_entropy: length mismatch");
  double loss = 0.0;
  for (std::size_t a = 0; a < pred.size(); ++a) {
    if (target[a] > 0.0) loss -= target[a] * std::log(std::max(pred[a], kLogClamp));
  }
  return loss;
}

double kl_divergence(const ClassDistribution& true_dist, const ClassDistribution& pred) {
  if (pred.size() != true_dist.size()) throw std::invalid_argument("kl_divergence: length mismatch");
  double div = 0.0;
  for (std::size_t a = 0; a < pred.size(); ++a) {
    const double d = true_dist[a];
    if (d > 0.0) div += d * (std::log(d) - std::log(std::max(pred[a], kLogClamp)));
  }
  return div;
}

double entropy(const ClassDistribution& dist) {
  double h = 0.0;
  for (double p : dist.probs()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

}  // namespace sceneparse
