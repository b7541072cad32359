#pragma once

// Two-stage training and inference on top of the individual modules.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sceneparse/model_io.hpp"

namespace sceneparse {

enum class ParseMode {
  baseline,  // per-pixel argmax of the stage-1 linear classifier
  cover,     // segmentation tree + purity classifier + optimal cover
};
ParseMode parse_mode(const std::string& name);

struct ParseResult {
  LabelMap labels;
  /// Per-pixel class distribution (N_c x H x W): the pixel classifier's output in
  /// baseline mode, the chosen component's distribution in cover mode.
  FeatureVolume distributions;
  /// Cover mode only.
  SegTree tree;
  CoverResult cover;
};

class SceneParser {
 public:
  /// Requires the stage-1 classifier for baseline mode and the purity classifier
  /// for cover mode.
  explicit SceneParser(ModelBundle bundle);

  const ModelBundle& bundle() const { return bundle_; }
  ParseResult parse(const FeatureVolume& image, ParseMode mode) const;

 private:
  ModelBundle bundle_;
  MultiscaleNet net_;
};

struct ComponentSampling {
  /// At most this many single-class components per image; 0 keeps all. Components
  /// mixing several classes are always kept: they are few, and they are the ones
  /// whose costs decide between a segment and its ancestors.
  int per_image = 64;
  std::uint64_t seed = 1;
};

/// Stage-2 training set: for each candidate component with labeled pixels, the pooled
/// descriptor and its normalized ground-truth label histogram.
std::vector<ComponentExample> collect_component_examples(const MultiscaleNet& net, const Dataset& data, int grid,
                                                         int min_component, const ComponentSampling& sampling);

/// Predictions for every sample, in sample order. Images are parsed in parallel.
std::vector<LabelMap> parse_dataset(const SceneParser& parser, const Dataset& data, ParseMode mode);

}  // namespace sceneparse
