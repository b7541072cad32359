#pragma once

// Multiscale convolutional feature extractor. One set of filter banks is
// applied to every level of a normalized Laplacian pyramid and the per-scale
// outputs are upsampled back to the input resolution and concatenated.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sceneparse/label_map.hpp"
#include "sceneparse/nn.hpp"
#include "sceneparse/pyramid.hpp"

namespace sceneparse {

struct StageSpec {
  int out_channels = 0;
  int kernel_size = 3;
  int fan_in = 1;  // input maps combined by each output map
  bool pool = false;
  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct NetConfig {
  std::string preset = "custom";
  int in_channels = 3;
  std::vector<StageSpec> stages;
  int n_scales = 3;
  int norm_window = kDefaultNormWindow;
  std::uint64_t table_seed = 1;

  /// 4/8/16 maps of 3x3 kernels; fast enough for tests and desk-scale training.
  static NetConfig toy();
  /// 16/64/256 maps of 7x7 kernels with fan-in 3/8/16.
  static NetConfig paper();
  static NetConfig from_preset(const std::string& name);

  void validate() const;
  int scale_dims() const { return stages.back().out_channels; }
  int feature_dims() const { return n_scales * scale_dims(); }
  /// Output stride of one scale relative to its pyramid level.
  int stride() const;
  /// Smallest image side accepted by extract_features.
  int min_image_extent() const { return stride() << (n_scales - 1); }

  friend bool operator==(const NetConfig&, const NetConfig&) = default;
};

/// Filter banks for `config`. Sparse connection tables draw `fan_in` distinct input
/// maps per output map from `config.table_seed`; weights start at zero.
std::vector<FilterBank> make_filter_banks(const NetConfig& config);

struct StageTrace {
  FeatureVolume input;
  FeatureVolume activated;  // conv output, after tanh when the stage has one
  PoolResult pooled;        // only filled when the stage pools
};

struct ScaleTrace {
  std::vector<StageTrace> stages;
  FeatureVolume output;
};

struct DenseFeatureMap {
  /// D x H x W with D = n_scales * scale_dims, scale 0 first.
  FeatureVolume features;
  /// Native per-scale outputs before upsampling.
  std::vector<FeatureVolume> per_scale;
  int stride = 1;

  int channels() const { return features.channels(); }
};

/// Nearest-neighbour upsampling: each source pixel becomes a factor x factor block.
FeatureVolume upsample(const FeatureVolume& map, int factor);
/// upsample() cropped to (height, width).
FeatureVolume upsample_to(const FeatureVolume& map, int factor, int height, int width);

class MultiscaleNet {
 public:
  /// Random uniform +-1/sqrt(fan-in) initialization from `init_seed`.
  MultiscaleNet(NetConfig config, std::uint64_t init_seed);
  MultiscaleNet(NetConfig config, std::vector<FilterBank> banks);

  const NetConfig& config() const { return config_; }
  std::vector<FilterBank>& banks() { return banks_; }
  const std::vector<FilterBank>& banks() const { return banks_; }

  FeatureVolume forward_one_scale(const FeatureVolume& level) const;
  ScaleTrace forward_trace(const FeatureVolume& level) const;
  /// Accumulates the parameter gradient of one scale into `grads` (one per bank).
  void backward(const ScaleTrace& trace, const FeatureVolume& grad_output,
                std::vector<FilterBankGrad>& grads) const;

  std::vector<FeatureVolume> forward_pyramid(const Pyramid& pyramid) const;
  DenseFeatureMap extract_features(const FeatureVolume& image) const;
  Pyramid make_pyramid(const FeatureVolume& image) const;

  std::vector<ParamRef> parameters();
  std::vector<FilterBankGrad> zero_grads() const;

 private:
  NetConfig config_;
  std::vector<FilterBank> banks_;
};

FeatureVolume forward_one_scale(const FeatureVolume& level, const std::vector<FilterBank>& banks,
                                const NetConfig& config);

/// Writes the full-resolution feature vector of pixel (y, x) into `out`, reading
/// directly from the native per-scale maps.
void gather_pixel_features(const std::vector<FeatureVolume>& per_scale, int stride, int y, int x,
                           std::span<double> out);

enum class Sampling { natural, balanced };
Sampling parse_sampling(const std::string& name);

struct PixelSample {
  int image = 0;
  int y = 0;
  int x = 0;
  int label = 0;
};

/// Draws `budget` labeled pixels. Natural sampling is uniform over all labeled pixels;
/// balanced sampling gives every present class an equal share. Classes with no pixel
/// are reported through `missing_classes` under balanced sampling.
std::vector<PixelSample> sample_pixels(const std::vector<const LabelMap*>& maps, int n_classes,
                                       Sampling sampling, std::size_t budget, std::mt19937_64& rng,
                                       std::vector<int>* missing_classes = nullptr);

/// Mean cross-entropy of `classifier` over `pixels` of one image. With `grads` set,
/// accumulates the gradient of that mean laid out as net.parameters() followed by
/// the classifier weights.
double stage1_batch_loss(const MultiscaleNet& net, const LinearClassifier& classifier, const Pyramid& pyramid,
                         std::span<const PixelSample> pixels, Gradients* grads);

struct Stage1Options {
  Sampling sampling = Sampling::balanced;
  int epochs = 10;
  double lr = 0.05;
  double weight_decay = 1e-5;
  std::uint64_t seed = 1;
  int samples_per_image = 256;
  bool jitter = false;
  std::function<void(int epoch, double mean_loss)> on_epoch;
};

struct Stage1Result {
  LinearClassifier pixel_classifier;
  std::vector<double> epoch_losses;
  std::vector<int> skipped_classes;
};

/// Trains the shared filter banks of `net` jointly with a per-pixel linear softmax
/// classifier on hard targets.
Stage1Result train_stage1(MultiscaleNet& net, const Dataset& data, const Stage1Options& options);

/// Per-pixel argmax of the stage-1 linear classifier.
LabelMap classify_pixels(const DenseFeatureMap& features, const LinearClassifier& classifier);

}  // namespace sceneparse
