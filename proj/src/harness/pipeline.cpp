#include "sceneparse/pipeline.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <random>
#include <stdexcept>

#include "sceneparse/descriptor.hpp"

namespace sceneparse {

ParseMode parse_mode(const std::string& name) {
  if (name == "baseline") return ParseMode::baseline;
  if (name == "cover") return ParseMode::cover;
  throw std::invalid_argument("unknown parse mode '" + name + "' (expected baseline or cover)");
}

SceneParser::SceneParser(ModelBundle bundle) : bundle_(std::move(bundle)), net_(bundle_.net, bundle_.banks) {
  if (bundle_.n_classes() < 1) throw std::invalid_argument("SceneParser: model has no classes");
  if (bundle_.grid < 1) throw std::invalid_argument("SceneParser: grid must be >= 1");
}

ParseResult SceneParser::parse(const FeatureVolume& image, ParseMode mode) const {
  const int n_classes = bundle_.n_classes();
  const auto dense = net_.extract_features(image);
  const int h = image.height();
  const int w = image.width();
  ParseResult result;
  result.distributions = FeatureVolume(n_classes, h, w);

  if (mode == ParseMode::baseline) {
    if (!bundle_.pixel_classifier) throw std::invalid_argument("baseline parsing needs the stage-1 pixel classifier");
    const auto& clf = *bundle_.pixel_classifier;
    result.labels = classify_pixels(dense, clf);
    const auto& f = dense.features;
#pragma omp parallel
    {
      std::vector<double> x(f.channels());
#pragma omp for
      for (int y = 0; y < h; ++y) {
        for (int col = 0; col < w; ++col) {
          for (int c = 0; c < f.channels(); ++c) x[c] = f.at(c, y, col);
          const auto d = clf.classify(x);
          for (int k = 0; k < n_classes; ++k) result.distributions.at(k, y, col) = d[k];
        }
      }
    }
    return result;
  }

  if (!bundle_.purity) throw std::invalid_argument("cover parsing needs the purity classifier");
  const auto& clf = *bundle_.purity;
  result.tree = build_hierarchy(image, bundle_.min_component);
  const auto nodes = result.tree.candidates();
  const ComponentPooler pooler(dense.features, result.tree);
  const auto descriptors = pooler.pool_flat(nodes, bundle_.grid);
  std::vector<ClassDistribution> dists(nodes.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t i = 0; i < nodes.size(); ++i) dists[i] = classify_component(descriptors[i], clf);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    auto& node = result.tree.node(nodes[i]);
    node.cost = purity_cost(dists[i]);
    node.distribution = std::move(dists[i]);
  }
  result.cover = optimal_cover(result.tree);
  result.labels = label_image(result.tree, result.cover);
  for (int p = 0; p < h * w; ++p) {
    const auto& d = *result.tree.node(result.cover.chosen[p]).distribution;
    for (int k = 0; k < n_classes; ++k) result.distributions.data()[static_cast<std::size_t>(k) * h * w + p] = d[k];
  }
  return result;
}

std::vector<ComponentExample> collect_component_examples(const MultiscaleNet& net, const Dataset& data, int grid,
                                                         int min_component, const ComponentSampling& sampling) {
  const int n_classes = data.n_classes();
  std::vector<std::vector<ComponentExample>> per_image(data.samples.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    try {
      const auto& sample = data.samples[i];
      const auto dense = net.extract_features(sample.image);
      const auto tree = build_hierarchy(sample.image, min_component);
      const auto hist = label_histograms(tree, sample.labels, n_classes);
      std::vector<int> pure;
      std::vector<int> mixed;
      for (int id : tree.candidates()) {
        const auto* row = hist.data() + static_cast<std::size_t>(id) * n_classes;
        const int present = static_cast<int>(std::count_if(row, row + n_classes, [](double c) { return c > 0.0; }));
        if (present == 1) pure.push_back(id);
        if (present > 1) mixed.push_back(id);
      }
      if (sampling.per_image > 0 && static_cast<int>(pure.size()) > sampling.per_image) {
        std::mt19937_64 rng(sampling.seed + 0x9E3779B97F4A7C15ULL * (i + 1));
        std::shuffle(pure.begin(), pure.end(), rng);
        pure.resize(sampling.per_image);
      }
      std::vector<int> nodes = std::move(mixed);
      nodes.insert(nodes.end(), pure.begin(), pure.end());
      std::sort(nodes.begin(), nodes.end());
      const ComponentPooler pooler(dense.features, tree);
      auto descriptors = pooler.pool_flat(nodes, grid);
      auto& out = per_image[i];
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        std::span<const double> counts(hist.data() + static_cast<std::size_t>(nodes[k]) * n_classes, n_classes);
        out.push_back({std::move(descriptors[k]), ClassDistribution::from_counts(counts)});
      }
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<ComponentExample> examples;
  for (auto& v : per_image) {
    for (auto& e : v) examples.push_back(std::move(e));
  }
  return examples;
}

std::vector<LabelMap> parse_dataset(const SceneParser& parser, const Dataset& data, ParseMode mode) {
  std::vector<LabelMap> out(data.samples.size());
  std::exception_ptr error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    try {
      out[i] = parser.parse(data.samples[i].image, mode).labels;
    } catch (...) {
#pragma omp critical
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return out;
}

}  // namespace sceneparse
