#include "sceneparse/msnet.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sceneparse {

NetConfig NetConfig::toy() {
  NetConfig c;
  c.preset = "toy";
  c.stages = {{4, 3, 3, true}, {8, 3, 4, true}, {16, 3, 4, false}};
  return c;
}

NetConfig NetConfig::paper() {
  NetConfig c;
  c.preset = "paper";
  c.stages = {{16, 7, 3, true}, {64, 7, 8, true}, {256, 7, 16, false}};
  return c;
}

NetConfig NetConfig::from_preset(const std::string& name) {
  if (name == "toy") return toy();
  if (name == "paper") return paper();
  throw std::invalid_argument("unknown preset '" + name + "' (expected toy or paper)");
}

void NetConfig::validate() const {
  if (stages.empty()) throw std::invalid_argument("NetConfig: no stages");
  if (n_scales < 1) throw std::invalid_argument("NetConfig: need at least one scale");
  if (in_channels < 1) throw std::invalid_argument("NetConfig: need at least one input channel");
  int prev = in_channels;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (s.kernel_size < 1 || s.kernel_size % 2 == 0) {
      throw std::invalid_argument("NetConfig: stage " + std::to_string(i) + " kernel size must be odd");
    }
    if (s.out_channels < 1) throw std::invalid_argument("NetConfig: stage " + std::to_string(i) + " has no maps");
    if (s.fan_in < 1 || s.fan_in > prev) {
      throw std::invalid_argument("NetConfig: stage " + std::to_string(i) + " fan-in " +
                                  std::to_string(s.fan_in) + " exceeds " + std::to_string(prev) + " input maps");
    }
    prev = s.out_channels;
  }
}

int NetConfig::stride() const {
  int stride = 1;
  for (const auto& s : stages) {
    if (s.pool) stride *= 2;
  }
  return stride;
}

std::vector<FilterBank> make_filter_banks(const NetConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.table_seed);
  std::vector<FilterBank> banks;
  int prev = config.in_channels;
  for (const auto& s : config.stages) {
    std::vector<Connection> conns;
    std::vector<int> inputs(prev);
    for (int p = 0; p < s.out_channels; ++p) {
      if (s.fan_in == prev) {
        for (int q = 0; q < prev; ++q) conns.push_back({p, q});
        continue;
      }
      // Partial Fisher-Yates: the first fan_in entries are a uniform draw without replacement.
      std::iota(inputs.begin(), inputs.end(), 0);
      for (int i = 0; i < s.fan_in; ++i) {
        std::uniform_int_distribution<int> pick(i, prev - 1);
        std::swap(inputs[i], inputs[pick(rng)]);
      }
      std::vector<int> chosen(inputs.begin(), inputs.begin() + s.fan_in);
      std::sort(chosen.begin(), chosen.end());
      for (int q : chosen) conns.push_back({p, q});
    }
    banks.emplace_back(prev, s.out_channels, s.kernel_size, std::move(conns));
    prev = s.out_channels;
  }
  return banks;
}

FeatureVolume upsample(const FeatureVolume& map, int factor) {
  return upsample_to(map, factor, map.height() * factor, map.width() * factor);
}

FeatureVolume upsample_to(const FeatureVolume& map, int factor, int height, int width) {
  if (factor < 1) throw std::invalid_argument("upsample: factor must be >= 1");
  if (height > map.height() * factor || width > map.width() * factor) {
    throw std::invalid_argument("upsample: target larger than the upsampled map");
  }
  FeatureVolume out(map.channels(), height, width);
#pragma omp parallel for
  for (int c = 0; c < map.channels(); ++c) {
    for (int y = 0; y < height; ++y) {
      const auto src = map.row(c, y / factor);
      auto dst = out.row(c, y);
      for (int x = 0; x < width; ++x) dst[x] = src[x / factor];
    }
  }
  return out;
}

MultiscaleNet::MultiscaleNet(NetConfig config, std::uint64_t init_seed)
    : config_(std::move(config)), banks_(make_filter_banks(config_)) {
  std::mt19937_64 rng(init_seed);
  for (auto& bank : banks_) bank.init_uniform(rng);
}

MultiscaleNet::MultiscaleNet(NetConfig config, std::vector<FilterBank> banks)
    : config_(std::move(config)), banks_(std::move(banks)) {
  config_.validate();
  if (banks_.size() != config_.stages.size()) throw std::invalid_argument("MultiscaleNet: bank count mismatch");
  int prev = config_.in_channels;
  for (std::size_t i = 0; i < banks_.size(); ++i) {
    const auto& s = config_.stages[i];
    const auto& b = banks_[i];
    if (b.in_channels() != prev || b.out_channels() != s.out_channels || b.kernel_size() != s.kernel_size) {
      throw std::invalid_argument("MultiscaleNet: bank " + std::to_string(i) + " does not match its stage");
    }
    prev = s.out_channels;
  }
}

ScaleTrace MultiscaleNet::forward_trace(const FeatureVolume& level) const {
  const int stride = config_.stride();
  if (level.height() < stride || level.width() < stride) {
    throw std::invalid_argument("forward_one_scale: " + std::to_string(level.height()) + "x" +
                                std::to_string(level.width()) + " level is smaller than the stride " +
                                std::to_string(stride));
  }
  ScaleTrace trace;
  trace.stages.resize(banks_.size());
  FeatureVolume x = level;
  for (std::size_t i = 0; i < banks_.size(); ++i) {
    auto& st = trace.stages[i];
    const auto& spec = config_.stages[i];
    const bool last = i + 1 == banks_.size();
    st.input = std::move(x);
    auto y = conv2d(st.input, banks_[i], spec.kernel_size / 2);
    st.activated = last ? std::move(y) : tanh_map(y);
    if (spec.pool) {
      st.pooled = maxpool2(st.activated);
      x = st.pooled.output;
    } else {
      x = st.activated;
    }
  }
  trace.output = std::move(x);
  return trace;
}

FeatureVolume MultiscaleNet::forward_one_scale(const FeatureVolume& level) const {
  return forward_trace(level).output;
}

FeatureVolume forward_one_scale(const FeatureVolume& level, const std::vector<FilterBank>& banks,
                                const NetConfig& config) {
  return MultiscaleNet(config, banks).forward_one_scale(level);
}

void MultiscaleNet::backward(const ScaleTrace& trace, const FeatureVolume& grad_output,
                             std::vector<FilterBankGrad>& grads) const {
  if (grads.size() != banks_.size()) throw std::invalid_argument("MultiscaleNet::backward: gradient count mismatch");
  FeatureVolume g = grad_output;
  for (int i = static_cast<int>(banks_.size()) - 1; i >= 0; --i) {
    const auto& st = trace.stages[i];
    const auto& spec = config_.stages[i];
    const bool last = i + 1 == static_cast<int>(banks_.size());
    if (spec.pool) g = maxpool2_backward(st.activated, st.pooled, g);
    if (!last) g = tanh_backward(st.activated, g);
    g = conv2d_backward(st.input, banks_[i], spec.kernel_size / 2, g, grads[i]);
  }
}

Pyramid MultiscaleNet::make_pyramid(const FeatureVolume& image) const {
  return laplacian_pyramid(image, config_.n_scales, config_.norm_window);
}

std::vector<FeatureVolume> MultiscaleNet::forward_pyramid(const Pyramid& pyramid) const {
  std::vector<FeatureVolume> out;
  out.reserve(pyramid.levels.size());
  for (const auto& level : pyramid.levels) out.push_back(forward_one_scale(level));
  return out;
}

DenseFeatureMap MultiscaleNet::extract_features(const FeatureVolume& image) const {
  if (image.channels() != config_.in_channels) {
    throw std::invalid_argument("extract_features: expected " + std::to_string(config_.in_channels) +
                                "-channel image");
  }
  const int min_extent = config_.min_image_extent();
  if (image.height() < min_extent || image.width() < min_extent) {
    throw std::invalid_argument("extract_features: image must be at least " + std::to_string(min_extent) +
                                " pixels on each side");
  }
  DenseFeatureMap map;
  map.stride = config_.stride();
  map.per_scale = forward_pyramid(make_pyramid(image));

  const int d = config_.scale_dims();
  map.features = FeatureVolume(config_.feature_dims(), image.height(), image.width());
  for (int s = 0; s < config_.n_scales; ++s) {
    const auto up = upsample_to(map.per_scale[s], map.stride << s, image.height(), image.width());
    std::copy(up.data().begin(), up.data().end(), map.features.plane(s * d).begin());
  }
  return map;
}

std::vector<ParamRef> MultiscaleNet::parameters() {
  std::vector<ParamRef> params;
  for (auto& bank : banks_) {
    params.push_back({bank.weights(), true});
    params.push_back({bank.biases(), false});
  }
  return params;
}

std::vector<FilterBankGrad> MultiscaleNet::zero_grads() const {
  std::vector<FilterBankGrad> grads;
  for (const auto& bank : banks_) grads.push_back(FilterBankGrad::zeros_like(bank));
  return grads;
}

void gather_pixel_features(const std::vector<FeatureVolume>& per_scale, int stride, int y, int x,
                           std::span<double> out) {
  std::size_t k = 0;
  for (std::size_t s = 0; s < per_scale.size(); ++s) {
    const int f = stride << s;
    const auto& m = per_scale[s];
    const int sy = y / f;
    const int sx = x / f;
    for (int c = 0; c < m.channels(); ++c) out[k++] = m.at(c, sy, sx);
  }
  if (k != out.size()) throw std::invalid_argument("gather_pixel_features: output size mismatch");
}

LabelMap classify_pixels(const DenseFeatureMap& features, const LinearClassifier& classifier) {
  const auto& f = features.features;
  LabelMap labels(f.height(), f.width());
#pragma omp parallel
  {
    std::vector<double> x(f.channels());
#pragma omp for
    for (int y = 0; y < f.height(); ++y) {
      for (int col = 0; col < f.width(); ++col) {
        for (int c = 0; c < f.channels(); ++c) x[c] = f.at(c, y, col);
        const auto logits = classifier.logits(x);
        labels.at(y, col) = static_cast<std::uint8_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
      }
    }
  }
  return labels;
}

}  // namespace sceneparse
