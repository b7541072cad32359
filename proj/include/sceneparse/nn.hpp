#pragma once

// Dense numeric kernels for the feature extractor and classifiers. Everything
// here works in 64-bit reals; the backward passes are written by hand and
// checked against central finite differences (see grad_check).

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sceneparse/distribution.hpp"
#include "sceneparse/volume.hpp"

namespace sceneparse {

/// Lower bound applied to probabilities before taking a logarithm.
inline constexpr double kLogClamp = 1e-12;

struct Connection {
  int out = 0;
  int in = 0;
  friend bool operator==(const Connection&, const Connection&) = default;
};

/// A sparse bank of square kernels: one kernel per (out, in) connection and one
/// bias per output map.
class FilterBank {
 public:
  FilterBank() = default;
  FilterBank(int in_channels, int out_channels, int kernel_size, std::vector<Connection> connections);

  static FilterBank fully_connected(int in_channels, int out_channels, int kernel_size);

  int in_channels() const { return in_channels_; }
  int out_channels() const { return out_channels_; }
  int kernel_size() const { return kernel_size_; }
  int kernel_area() const { return kernel_size_ * kernel_size_; }
  std::span<const Connection> connections() const { return connections_; }
  /// Connection indices feeding output map `out`, in ascending order.
  std::span<const int> connections_into(int out) const { return into_[out]; }
  /// Connection indices reading input map `in`, in ascending order.
  std::span<const int> connections_from(int in) const { return from_[in]; }

  std::span<double> kernel(int conn) {
    return {weights_.data() + static_cast<std::size_t>(conn) * kernel_area(),
            static_cast<std::size_t>(kernel_area())};
  }
  std::span<const double> kernel(int conn) const {
    return {weights_.data() + static_cast<std::size_t>(conn) * kernel_area(),
            static_cast<std::size_t>(kernel_area())};
  }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& biases() { return biases_; }
  const std::vector<double>& biases() const { return biases_; }

  /// Uniform in +-1/sqrt(fan-in) with fan-in = connections into the map times kernel area.
  void init_uniform(std::mt19937_64& rng);

 private:
  int in_channels_ = 0;
  int out_channels_ = 0;
  int kernel_size_ = 1;
  std::vector<Connection> connections_;
  std::vector<std::vector<int>> into_;
  std::vector<std::vector<int>> from_;
  std::vector<double> weights_;
  std::vector<double> biases_;
};

struct FilterBankGrad {
  std::vector<double> weights;
  std::vector<double> biases;

  static FilterBankGrad zeros_like(const FilterBank& bank) {
    return {std::vector<double>(bank.weights().size(), 0.0),
            std::vector<double>(bank.biases().size(), 0.0)};
  }
};

/// Zero-padded cross-correlation (no kernel flip). Output is
/// (out_channels, H + 2*pad - k + 1, W + 2*pad - k + 1).
FeatureVolume conv2d(const FeatureVolume& input, const FilterBank& bank, int pad);

/// Accumulates parameter gradients into `grad` and returns the input gradient.
FeatureVolume conv2d_backward(const FeatureVolume& input, const FilterBank& bank, int pad,
                              const FeatureVolume& grad_output, FilterBankGrad& grad);

struct PoolResult {
  FeatureVolume output;
  /// Flat input index chosen for every output cell.
  std::vector<std::size_t> argmax;
};

/// 2x2 max pooling, ceil on odd sizes. Ties go to the first cell in row-major order.
PoolResult maxpool2(const FeatureVolume& input);
FeatureVolume maxpool2_backward(const FeatureVolume& input, const PoolResult& pooled,
                                const FeatureVolume& grad_output);

FeatureVolume tanh_map(const FeatureVolume& input);
/// Gradient through tanh given the forward output.
FeatureVolume tanh_backward(const FeatureVolume& output, const FeatureVolume& grad_output);

ClassDistribution softmax(std::span<const double> logits);
/// -sum target * ln(max(pred, kLogClamp)).
double cross_entropy(const ClassDistribution& pred, const ClassDistribution& target);
/// sum d * ln(d / max(pred, kLogClamp)); zero-probability terms of `true_dist` contribute 0.
double kl_divergence(const ClassDistribution& true_dist, const ClassDistribution& pred);
/// Shannon entropy in nats with 0 ln 0 = 0.
double entropy(const ClassDistribution& dist);

/// View of one trainable tensor. Biases are exempt from weight decay.
struct ParamRef {
  std::span<double> values;
  bool decay = true;
};

using Gradients = std::vector<std::vector<double>>;

Gradients zero_gradients(std::span<const ParamRef> params);

/// p <- p - lr * (g + weight_decay * p), decay only on params with `decay` set.
void sgd_step(std::span<const ParamRef> params, const Gradients& grads, double lr, double weight_decay);

/// A scalar function of a parameter set that can report its own gradient.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::vector<ParamRef> parameters() = 0;
  /// Returns the loss; fills `grads` (shaped like parameters()) when non-null.
  virtual double evaluate(Gradients* grads) = 0;
};

/// Max over all parameters of |analytic - central difference| / max(|analytic|, |fd|, 1e-8).
double grad_check(Objective& objective, double eps = 1e-4);

/// Linear softmax classifier without bias: logits = W x.
class LinearClassifier {
 public:
  LinearClassifier() = default;
  LinearClassifier(int input_dims, int n_classes);

  int input_dims() const { return input_dims_; }
  int n_classes() const { return n_classes_; }
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }

  void init_uniform(std::mt19937_64& rng);
  std::vector<double> logits(std::span<const double> x) const;
  ClassDistribution classify(std::span<const double> x) const { return softmax(logits(x)); }

  /// Cross-entropy against `target`; adds dL/dW to `grad_w` and dL/dx to `grad_x`
  /// when those are non-empty.
  double loss_and_gradient(std::span<const double> x, const ClassDistribution& target,
                           std::span<double> grad_w, std::span<double> grad_x) const;

  std::vector<ParamRef> parameters() { return {ParamRef{weights_, true}}; }

 private:
  int input_dims_ = 0;
  int n_classes_ = 0;
  std::vector<double> weights_;
};

}  // namespace sceneparse
