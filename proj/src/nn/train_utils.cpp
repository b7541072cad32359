#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sceneparse/nn.hpp"

namespace sceneparse {

Gradients zero_gradients(std::span<const ParamRef> params) {
  Gradients g;
  g.reserve(params.size());
  for (const auto& p : params) g.emplace_back(p.values.size(), 0.0);
  return g;
}

void sgd_step(std::span<const ParamRef> params, const Gradients& grads, double lr, double weight_decay) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  if (weight_decay < 0.0) throw std::invalid_argument("sgd_step: negative weight decay");
  if (grads.size() != params.size()) throw std::invalid_argument("sgd_step: parameter/gradient count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].values.size()) {
      throw std::invalid_argument("sgd_step: gradient shape mismatch");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values;
    const auto& g = grads[i];
    const double decay = params[i].decay ? weight_decay : 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) values[j] -= lr * (g[j] + decay * values[j]);
  }
}

double grad_check(Objective& objective, double eps) {
  auto params = objective.parameters();
  Gradients analytic = zero_gradients(params);
  objective.evaluate(&analytic);

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].values;
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double saved = values[j];
      values[j] = saved + eps;
      const double plus = objective.evaluate(nullptr);
      values[j] = saved - eps;
      const double minus = objective.evaluate(nullptr);
      values[j] = saved;
      const double fd = (plus - minus) / (2.0 * eps);
      const double a = analytic[i][j];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-8});
      worst = std::max(worst, std::abs(a - fd) / denom);
    }
  }
  return worst;
}

LinearClassifier::LinearClassifier(int input_dims, int n_classes)
    : input_dims_(input_dims), n_classes_(n_classes) {
  if (input_dims < 1 || n_classes < 1) throw std::invalid_argument("LinearClassifier: bad dimensions");
  weights_.assign(static_cast<std::size_t>(input_dims) * n_classes, 0.0);
}

void LinearClassifier::init_uniform(std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dims_));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weights_) w = dist(rng);
}

std::vector<double> LinearClassifier::logits(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != input_dims_) throw std::invalid_argument("LinearClassifier: input size mismatch");
  std::vector<double> y(n_classes_, 0.0);
  for (int a = 0; a < n_classes_; ++a) {
    const double* w = weights_.data() + static_cast<std::size_t>(a) * input_dims_;
    double acc = 0.0;
    for (int j = 0; j < input_dims_; ++j) acc += w[j] * x[j];
    y[a] = acc;
  }
  return y;
}

double LinearClassifier::loss_and_gradient(std::span<const double> x, const ClassDistribution& target,
                                           std::span<double> grad_w, std::span<double> grad_x) const {
  if (static_cast<int>(target.size()) != n_classes_) {
    throw std::invalid_argument("LinearClassifier: target size mismatch");
  }
  const auto pred = softmax(logits(x));
  const double loss = cross_entropy(pred, target);
  if (!grad_w.empty() && grad_w.size() != weights_.size()) {
    throw std::invalid_argument("LinearClassifier: weight gradient size mismatch");
  }
  if (!grad_x.empty() && static_cast<int>(grad_x.size()) != input_dims_) {
    throw std::invalid_argument("LinearClassifier: input gradient size mismatch");
  }
  for (int a = 0; a < n_classes_; ++a) {
    const double delta = pred[a] - target[a];
    if (delta == 0.0) continue;
    const double* w = weights_.data() + static_cast<std::size_t>(a) * input_dims_;
    if (!grad_w.empty()) {
      double* gw = grad_w.data() + static_cast<std::size_t>(a) * input_dims_;
      for (int j = 0; j < input_dims_; ++j) gw[j] += delta * x[j];
    }
    if (!grad_x.empty()) {
      for (int j = 0; j < input_dims_; ++j) grad_x[j] += delta * w[j];
    }
  }
  return loss;
}

}  // namespace sceneparse
