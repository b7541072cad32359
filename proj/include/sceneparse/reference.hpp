#pragma once

// Deliberately plain serial implementations used as test oracles and as the
// baseline in benchmarks. None of them shares code with the kernels they check.

#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "sceneparse/metrics.hpp"
#include "sceneparse/nn.hpp"
#include "sceneparse/seghier.hpp"

namespace sceneparse::reference {

/// Zero-padded cross-correlation, one output value at a time.
FeatureVolume conv2d(const FeatureVolume& input, const FilterBank& bank, int pad);
/// 2x2 max pooling with ceil sizing; returns output values only.
FeatureVolume maxpool2(const FeatureVolume& input);
/// Windowed mean/std normalization computed pixel by pixel.
FeatureVolume local_normalize(const FeatureVolume& image, int window);

/// Minimum spanning forest weights of the 4-connected colour-distance graph (Prim),
/// sorted ascending. Builds its own adjacency from the image.
std::vector<double> prim_mst_weights(const FeatureVolume& image);
/// Altitudes of the internal nodes of a merge tree, sorted ascending.
std::vector<double> merge_weights(const SegTree& tree);

/// Pixel set of a node, found by walking every leaf's parent chain.
std::vector<int> node_pixels(const SegTree& tree, int node);
/// Masked grid max pooling by scanning the whole image for each cell, flattened
/// (cell row, cell col, channel).
std::vector<double> pool_component(const FeatureVolume& features, const SegTree& tree, int node, int grid);

struct CoverOracle {
  std::vector<int> chosen;
  double total_cost = 0.0;
};
/// For every pixel, scans all internal nodes that contain it and keeps the cheapest,
/// preferring the deeper node on ties.
CoverOracle brute_force_cover(const SegTree& tree);
/// Label of every pixel recomputed from its chosen node's distribution.
LabelMap relabel(const SegTree& tree, const std::vector<int>& chosen);

/// Random tree with width*height leaves; each merge joins 2 or 3 random roots.
SegTree random_tree(int width, int height, std::mt19937_64& rng);

/// Pixel and class accuracy counted directly from the two maps.
Metrics count_metrics(const LabelMap& predicted, const LabelMap& truth, int n_classes);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

SuiteResult check_conv_kernels(std::uint64_t seed, int cases);
SuiteResult check_local_normalize(std::uint64_t seed, int cases);
SuiteResult check_mst(std::uint64_t seed, int grids);
SuiteResult check_pooling(std::uint64_t seed, int cases);
SuiteResult check_cover(std::uint64_t seed, int trees);
SuiteResult check_labeling(std::uint64_t seed, int trees);
SuiteResult check_metrics(std::uint64_t seed, int cases);
/// Central-difference checks of every trainable stage. `max_error` receives the largest
/// relative error seen.
SuiteResult check_gradients(std::uint64_t seed, double tolerance, double* max_error = nullptr);

/// Runs every suite, prints one line per suite, returns true when all pass.
bool run_selftest(std::ostream& out, std::uint64_t seed);

}  // namespace sceneparse::reference
