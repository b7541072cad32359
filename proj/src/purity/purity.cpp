#include "sceneparse/purity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sceneparse {

PurityClassifier::PurityClassifier(int input_dims, int hidden, int n_classes)
    : input_dims_(input_dims), hidden_(hidden), n_classes_(n_classes) {
  if (input_dims < 1 || hidden < 1 || n_classes < 1) {
    throw std::invalid_argument("PurityClassifier: dimensions must be positive");
  }
  w1_.assign(static_cast<std::size_t>(hidden) * input_dims, 0.0);
  b1_.assign(hidden, 0.0);
  w2_.assign(static_cast<std::size_t>(n_classes) * hidden, 0.0);
}

void PurityClassifier::init_uniform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> first(-1.0 / std::sqrt(input_dims_), 1.0 / std::sqrt(input_dims_));
  for (double& w : w1_) w = first(rng);
  for (double& b : b1_) b = first(rng);
  std::uniform_real_distribution<double> second(-1.0 / std::sqrt(hidden_), 1.0 / std::sqrt(hidden_));
  for (double& w : w2_) w = second(rng);
}

namespace {

struct Activations {
  std::vector<double> hidden;
  std::vector<double> logits;
};

Activations forward(const PurityClassifier& clf, std::span<const double> x) {
  if (static_cast<int>(x.size()) != clf.input_dims()) {
    throw std::invalid_argument("PurityClassifier: expected " + std::to_string(clf.input_dims()) +
                                " inputs, got " + std::to_string(x.size()));
  }
  Activations a{std::vector<double>(clf.hidden()), std::vector<double>(clf.n_classes(), 0.0)};
  const int in = clf.input_dims();
  for (int j = 0; j < clf.hidden(); ++j) {
    const double* w = clf.w1().data() + static_cast<std::size_t>(j) * in;
    double acc = clf.b1()[j];
    for (int i = 0; i < in; ++i) acc += w[i] * x[i];
    a.hidden[j] = std::tanh(acc);
  }
  for (int k = 0; k < clf.n_classes(); ++k) {
    const double* w = clf.w2().data() + static_cast<std::size_t>(k) * clf.hidden();
    double acc = 0.0;
    for (int j = 0; j < clf.hidden(); ++j) acc += w[j] * a.hidden[j];
    a.logits[k] = acc;
  }
  return a;
}

}  // namespace

ClassDistribution PurityClassifier::classify(std::span<const double> x) const {
  return softmax(forward(*this, x).logits);
}

double PurityClassifier::loss_and_gradient(std::span<const double> x, const ClassDistribution& target,
                                           Gradients* grads) const {
  if (static_cast<int>(target.size()) != n_classes_) throw std::invalid_argument("PurityClassifier: target size mismatch");
  const auto act = forward(*this, x);
  const auto pred = softmax(act.logits);
  const double loss = kl_divergence(target, pred);
  if (!grads) return loss;
  if (grads->size() != 3) throw std::invalid_argument("PurityClassifier: expected three gradient tensors");
  auto& gw1 = (*grads)[0];
  auto& gb1 = (*grads)[1];
  auto& gw2 = (*grads)[2];

  std::vector<double> dhidden(hidden_, 0.0);
  for (int k = 0; k < n_classes_; ++k) {
    const double dy = pred[k] - target[k];
    if (dy == 0.0) continue;
    const std::size_t row = static_cast<std::size_t>(k) * hidden_;
    for (int j = 0; j < hidden_; ++j) {
      gw2[row + j] += dy * act.hidden[j];
      dhidden[j] += dy * w2_[row + j];
    }
  }
  for (int j = 0; j < hidden_; ++j) {
    const double da = dhidden[j] * (1.0 - act.hidden[j] * act.hidden[j]);
    gb1[j] += da;
    if (da == 0.0) continue;
    double* g = gw1.data() + static_cast<std::size_t>(j) * input_dims_;
    for (int i = 0; i < input_dims_; ++i) g[i] += da * x[i];
  }
  return loss;
}

std::vector<ParamRef> PurityClassifier::parameters() {
  return {ParamRef{w1_, true}, ParamRef{b1_, false}, ParamRef{w2_, true}};
}

ClassDistribution classify_component(std::span<const double> x, const PurityClassifier& clf) {
  return clf.classify(x);
}

double purity_cost(const ClassDistribution& dist) { return entropy(dist); }

CoverResult optimal_cover(const SegTree& tree) {
  const int n = tree.size();
  std::vector<int> best(n, -1);
  std::vector<double> best_cost(n, 0.0);
  const int root = tree.root();
  const auto cost_of = [&](int id) {
    const auto& c = tree.node(id).cost;
    if (!c) throw std::invalid_argument("optimal_cover: node " + std::to_string(id) + " has no cost");
    return *c;
  };

  // Parents always carry larger ids, so a descending sweep is a top-down pass.
  for (int id = n - 1; id >= 0; --id) {
    if (tree.is_leaf(id) && id != root) {
      best[id] = best[tree.node(id).parent];
      continue;
    }
    const double c = cost_of(id);
    const int p = tree.node(id).parent;
    if (p < 0 || c <= best_cost[p]) {
      best[id] = id;
      best_cost[id] = c;
    } else {
      best[id] = best[p];
      best_cost[id] = best_cost[p];
    }
  }

  CoverResult result;
  result.chosen.assign(best.begin(), best.begin() + tree.leaf_count());
  result.cover_set = result.chosen;
  std::sort(result.cover_set.begin(), result.cover_set.end());
  result.cover_set.erase(std::unique(result.cover_set.begin(), result.cover_set.end()), result.cover_set.end());
  return result;
}

LabelMap label_image(const SegTree& tree, const CoverResult& cover) {
  LabelMap labels(tree.height(), tree.width());
  std::vector<int> label_of(tree.size(), -1);
  for (int k : cover.cover_set) {
    const auto& d = tree.node(k).distribution;
    if (!d) throw std::invalid_argument("label_image: node " + std::to_string(k) + " has no distribution");
    label_of[k] = d->argmax();
  }
  for (std::size_t i = 0; i < cover.chosen.size(); ++i) labels[i] = static_cast<std::uint8_t>(label_of[cover.chosen[i]]);
  return labels;
}

std::vector<double> label_histograms(const SegTree& tree, const LabelMap& labels, int n_classes) {
  if (labels.height() != tree.height() || labels.width() != tree.width()) {
    throw std::invalid_argument("label_histograms: label map and tree sizes differ");
  }
  const int n = tree.size();
  std::vector<double> hist(static_cast<std::size_t>(n) * n_classes, 0.0);
  for (int p = 0; p < tree.leaf_count(); ++p) {
    const int l = labels[p];
    if (l == LabelMap::kVoid) continue;
    if (l >= n_classes) throw std::out_of_range("label_histograms: label exceeds class count");
    hist[static_cast<std::size_t>(p) * n_classes + l] += 1.0;
  }
  for (int id = 0; id < n; ++id) {
    const int p = tree.node(id).parent;
    if (p < 0) continue;
    for (int c = 0; c < n_classes; ++c) {
      hist[static_cast<std::size_t>(p) * n_classes + c] += hist[static_cast<std::size_t>(id) * n_classes + c];
    }
  }
  return hist;
}

void assign_ground_truth_costs(SegTree& tree, const LabelMap& labels, int n_classes) {
  const auto hist = label_histograms(tree, labels, n_classes);
  for (int id : tree.candidates()) {
    std::span<const double> counts(hist.data() + static_cast<std::size_t>(id) * n_classes, n_classes);
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    auto dist = total > 0.0 ? ClassDistribution::from_counts(counts) : ClassDistribution::uniform(n_classes);
    tree.node(id).cost = purity_cost(dist);
    tree.node(id).distribution = std::move(dist);
  }
}

Stage2Result train_purity_classifier(const std::vector<ComponentExample>& examples, int n_classes,
                                     const Stage2Options& options) {
  if (examples.empty()) throw std::invalid_argument("train_purity_classifier: no training components");
  if (options.batch_size < 1) throw std::invalid_argument("train_purity_classifier: batch size must be >= 1");
  const int dims = static_cast<int>(examples.front().descriptor.size());
  Stage2Result result;
  std::mt19937_64 rng(options.seed);
  result.classifier = PurityClassifier(dims, options.hidden, n_classes);
  result.classifier.init_uniform(rng);
  auto params = result.classifier.parameters();

  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  Gradients grads = zero_gradients(params);
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::size_t stop = std::min(order.size(), start + options.batch_size);
      for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const auto& ex = examples[order[i]];
        loss_sum += result.classifier.loss_and_gradient(ex.descriptor, ex.target, &grads);
      }
      const double scale = 1.0 / static_cast<double>(stop - start);
      for (auto& g : grads) {
        for (double& v : g) v *= scale;
      }
      sgd_step(params, grads, options.lr, options.weight_decay);
    }
    const double mean = loss_sum / static_cast<double>(examples.size());
    result.epoch_losses.push_back(mean);
    if (options.on_epoch) options.on_epoch(epoch, mean);
  }
  return result;
}

}  // namespace sceneparse
