#include <algorithm>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "sceneparse/dataset.hpp"
#include "sceneparse/msnet.hpp"

namespace sceneparse {

Sampling parse_sampling(const std::string& name) {
  if (name == "natural") return Sampling::natural;
  if (name == "balanced") return Sampling::balanced;
  throw std::invalid_argument("unknown sampling '" + name + "' (expected natural or balanced)");
}

std::vector<PixelSample> sample_pixels(const std::vector<const LabelMap*>& maps, int n_classes,
                                       Sampling sampling, std::size_t budget, std::mt19937_64& rng,
                                       std::vector<int>* missing_classes) {
  // Pools of (image, flat pixel) per class.
  std::vector<std::vector<std::pair<int, int>>> pools(n_classes);
  for (int m = 0; m < static_cast<int>(maps.size()); ++m) {
    const auto& lm = *maps[m];
    for (int i = 0; i < static_cast<int>(lm.size()); ++i) {
      const int label = lm[i];
      if (label == LabelMap::kVoid) continue;
      if (label >= n_classes) throw std::out_of_range("sample_pixels: label exceeds class count");
      pools[label].emplace_back(m, i);
    }
  }

  std::vector<PixelSample> out;
  out.reserve(budget);
  auto emit = [&](int label, std::pair<int, int> at) {
    const int w = maps[at.first]->width();
    out.push_back({at.first, at.second / w, at.second % w, label});
  };

  if (sampling == Sampling::natural) {
    std::vector<std::size_t> offsets(n_classes + 1, 0);
    for (int c = 0; c < n_classes; ++c) offsets[c + 1] = offsets[c] + pools[c].size();
    if (offsets.back() == 0) throw std::invalid_argument("sample_pixels: no labeled pixels");
    std::uniform_int_distribution<std::size_t> pick(0, offsets.back() - 1);
    for (std::size_t k = 0; k < budget; ++k) {
      const std::size_t r = pick(rng);
      const int c = static_cast<int>(std::upper_bound(offsets.begin(), offsets.end(), r) - offsets.begin()) - 1;
      emit(c, pools[c][r - offsets[c]]);
    }
    return out;
  }

  std::vector<int> present;
  for (int c = 0; c < n_classes; ++c) {
    if (pools[c].empty()) {
      if (missing_classes) missing_classes->push_back(c);
    } else {
      present.push_back(c);
    }
  }
  if (present.empty()) throw std::invalid_argument("sample_pixels: no labeled pixels");
  const std::size_t share = budget / present.size();
  const std::size_t extra = budget % present.size();
  for (std::size_t i = 0; i < present.size(); ++i) {
    const int c = present[i];
    std::uniform_int_distribution<std::size_t> pick(0, pools[c].size() - 1);
    const std::size_t n = share + (i < extra ? 1 : 0);
    for (std::size_t k = 0; k < n; ++k) emit(c, pools[c][pick(rng)]);
  }
  return out;
}

double stage1_batch_loss(const MultiscaleNet& net, const LinearClassifier& classifier, const Pyramid& pyramid,
                         std::span<const PixelSample> pixels, Gradients* grads) {
  const auto& cfg = net.config();
  if (pixels.empty()) throw std::invalid_argument("stage1_batch_loss: empty batch");
  if (pyramid.num_levels() != cfg.n_scales) throw std::invalid_argument("stage1_batch_loss: pyramid depth mismatch");
  const int dims = cfg.feature_dims();
  const int n_classes = classifier.n_classes();
  const int stride = cfg.stride();

  std::vector<ScaleTrace> traces;
  std::vector<FeatureVolume> outputs;
  for (const auto& level : pyramid.levels) {
    traces.push_back(net.forward_trace(level));
    outputs.push_back(traces.back().output);
  }
  std::vector<FeatureVolume> grad_out;
  for (const auto& o : outputs) grad_out.emplace_back(o.channels(), o.height(), o.width());

  const double scale = 1.0 / static_cast<double>(pixels.size());
  std::vector<double> feature(dims);
  std::vector<double> grad_feature(dims);
  std::vector<double> grad_w(static_cast<std::size_t>(dims) * n_classes, 0.0);
  double loss = 0.0;
  for (const auto& s : pixels) {
    if (s.label < 0 || s.label >= n_classes) throw std::out_of_range("stage1_batch_loss: label out of range");
    gather_pixel_features(outputs, stride, s.y, s.x, feature);
    std::fill(grad_feature.begin(), grad_feature.end(), 0.0);
    loss += classifier.loss_and_gradient(feature, ClassDistribution::one_hot(n_classes, s.label), grad_w,
                                         grad_feature);
    if (!grads) continue;
    std::size_t k = 0;
    for (int sc = 0; sc < cfg.n_scales; ++sc) {
      const int f = stride << sc;
      auto& g = grad_out[sc];
      for (int c = 0; c < g.channels(); ++c) g.at(c, s.y / f, s.x / f) += grad_feature[k++] * scale;
    }
  }
  if (grads) {
    const std::size_t n_banks = net.banks().size();
    if (grads->size() != 2 * n_banks + 1) throw std::invalid_argument("stage1_batch_loss: gradient layout mismatch");
    auto bank_grads = net.zero_grads();
    for (int sc = 0; sc < cfg.n_scales; ++sc) net.backward(traces[sc], grad_out[sc], bank_grads);
    for (std::size_t b = 0; b < n_banks; ++b) {
      auto& gw = (*grads)[2 * b];
      auto& gb = (*grads)[2 * b + 1];
      for (std::size_t j = 0; j < gw.size(); ++j) gw[j] += bank_grads[b].weights[j];
      for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += bank_grads[b].biases[j];
    }
    auto& gc = grads->back();
    for (std::size_t j = 0; j < gc.size(); ++j) gc[j] += grad_w[j] * scale;
  }
  return loss * scale;
}

Stage1Result train_stage1(MultiscaleNet& net, const Dataset& data, const Stage1Options& options) {
  if (data.samples.empty()) throw std::invalid_argument("train_stage1: empty dataset");
  if (options.epochs < 0) throw std::invalid_argument("train_stage1: negative epoch count");
  const int n_classes = data.n_classes();
  if (n_classes < 2) throw std::invalid_argument("train_stage1: need at least two classes");

  const auto& cfg = net.config();
  const int dims = cfg.feature_dims();
  const int n_images = static_cast<int>(data.samples.size());

  Stage1Result result;
  std::mt19937_64 rng(options.seed);
  result.pixel_classifier = LinearClassifier(dims, n_classes);
  result.pixel_classifier.init_uniform(rng);

  // Pyramids only change between epochs when jitter is on.
  std::vector<Pyramid> pyramids(n_images);
  std::vector<LabelMap> labels(n_images);
  auto prepare = [&](int i, const FeatureVolume& image, LabelMap lm) {
    pyramids[i] = net.make_pyramid(image);
    labels[i] = std::move(lm);
  };
  if (!options.jitter) {
    for (int i = 0; i < n_images; ++i) prepare(i, data.samples[i].image, data.samples[i].labels);
  }

  auto params = net.parameters();
  params.push_back({result.pixel_classifier.weights(), true});

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.jitter) {
      for (int i = 0; i < n_images; ++i) {
        auto [img, lm] = jitter(data.samples[i].image, data.samples[i].labels, rng());
        prepare(i, img, std::move(lm));
      }
    }
    std::vector<const LabelMap*> maps;
    for (const auto& lm : labels) maps.push_back(&lm);
    std::vector<int> missing;
    const auto samples = sample_pixels(maps, n_classes, options.sampling,
                                       static_cast<std::size_t>(options.samples_per_image) * n_images, rng,
                                       &missing);
    if (epoch == 0) {
      for (int c : missing) {
        std::cerr << "warning: class " << c << " has no labeled pixels; skipped by balanced sampling\n";
      }
      result.skipped_classes = missing;
    }

    std::vector<std::vector<PixelSample>> by_image(n_images);
    for (const auto& s : samples) by_image[s.image].push_back(s);
    std::vector<int> order(n_images);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (int i : order) {
      const auto& pixels = by_image[i];
      if (pixels.empty()) continue;
      Gradients grads = zero_gradients(params);
      loss_sum += stage1_batch_loss(net, result.pixel_classifier, pyramids[i], pixels, &grads) *
                  static_cast<double>(pixels.size());
      loss_count += pixels.size();
      sgd_step(params, grads, options.lr, options.weight_decay);
    }
    const double mean_loss = loss_count ? loss_sum / static_cast<double>(loss_count) : 0.0;
    result.epoch_losses.push_back(mean_loss);
    if (options.on_epoch) options.on_epoch(epoch, mean_loss);
  }
  return result;
}

}  // namespace sceneparse
