#pragma once

// Component classifier, entropy purity costs and the optimal cover of a
// segmentation tree.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "sceneparse/distribution.hpp"
#include "sceneparse/label_map.hpp"
#include "sceneparse/nn.hpp"
#include "sceneparse/seghier.hpp"

namespace sceneparse {

/// Two-layer network y = W2 tanh(W1 x + b1) followed by a softmax. No output bias.
class PurityClassifier {
 public:
  PurityClassifier() = default;
  PurityClassifier(int input_dims, int hidden, int n_classes);

  int input_dims() const { return input_dims_; }
  int hidden() const { return hidden_; }
  int n_classes() const { return n_classes_; }

  std::vector<double>& w1() { return w1_; }
  std::vector<double>& b1() { return b1_; }
  std::vector<double>& w2() { return w2_; }
  const std::vector<double>& w1() const { return w1_; }
  const std::vector<double>& b1() const { return b1_; }
  const std::vector<double>& w2() const { return w2_; }

  void init_uniform(std::mt19937_64& rng);
  ClassDistribution classify(std::span<const double> x) const;

  /// KL(target || prediction); accumulates gradients (ordered w1, b1, w2) when non-null.
  double loss_and_gradient(std::span<const double> x, const ClassDistribution& target, Gradients* grads) const;

  std::vector<ParamRef> parameters();

 private:
  int input_dims_ = 0;
  int hidden_ = 0;
  int n_classes_ = 0;
  std::vector<double> w1_;
  std::vector<double> b1_;
  std::vector<double> w2_;
};

ClassDistribution classify_component(std::span<const double> x, const PurityClassifier& clf);

/// Entropy of the distribution in nats, in [0, ln N].
double purity_cost(const ClassDistribution& dist);

struct CoverResult {
  /// Chosen node k*(i) for every pixel, row-major.
  std::vector<int> chosen;
  /// Distinct chosen nodes, ascending.
  std::vector<int> cover_set;
};

/// For every pixel, the minimal-cost node on the path from its parent node to the
/// root; ties go to the deeper node. Throws if a candidate node has no cost.
CoverResult optimal_cover(const SegTree& tree);

/// Label of each pixel = argmax of its chosen node's distribution.
LabelMap label_image(const SegTree& tree, const CoverResult& cover);

/// Per-node label histograms (void pixels excluded), nodes x n_classes, row-major.
std::vector<double> label_histograms(const SegTree& tree, const LabelMap& labels, int n_classes);

/// Sets cost = entropy and distribution = normalized histogram of the ground truth on
/// every candidate node. Nodes without labeled pixels get the uniform distribution.
void assign_ground_truth_costs(SegTree& tree, const LabelMap& labels, int n_classes);

struct ComponentExample {
  std::vector<double> descriptor;
  ClassDistribution target;
};

struct Stage2Options {
  int epochs = 20;
  double lr = 0.1;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  int hidden = 32;
  int batch_size = 16;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct Stage2Result {
  PurityClassifier classifier;
  std::vector<double> epoch_losses;
};

/// Minimizes the mean KL divergence between component label histograms and
/// predicted distributions by minibatch SGD.
Stage2Result train_purity_classifier(const std::vector<ComponentExample>& examples, int n_classes,
                                     const Stage2Options& options);

}  // namespace sceneparse
