#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sceneparse/label_map.hpp"

namespace sceneparse {

struct SynthOptions {
  std::uint64_t seed = 1;
  int count = 1;
  int height = 64;
  int width = 64;
  int n_classes = 4;
  std::string split = "train";
};

struct SynthReport {
  struct Shortfall {
    int image;
    int requested;
    int placed;
  };
  /// Images where some shapes could not be placed without overlap.
  std::vector<Shortfall> shortfalls;
};

/// Textured background (class 0) with 1-4 non-overlapping filled shapes. Classes
/// 1, 2, 3 are circle, rectangle, triangle (cycling for more classes) and each
/// class has its own base colour. Pixel values are quantized to 8 bits.
Dataset synth_generate(const SynthOptions& options, SynthReport* report = nullptr);

/// RGB base colour used for a class by the generator, components in [0, 1].
std::array<double, 3> synth_class_color(int cls);

struct JitterParams {
  bool flip = false;
  double angle_degrees = 0.0;
};

inline constexpr double kMaxJitterDegrees = 8.0;

/// Horizontal flip with probability 0.5 and rotation uniform in [-8, 8] degrees.
JitterParams draw_jitter(std::mt19937_64& rng);

/// Flip first, then rotate about the image centre. The image is resampled
/// bilinearly (edge-clamped), labels by nearest neighbour; label pixels that
/// map outside the frame become void.
std::pair<FeatureVolume, LabelMap> apply_jitter(const FeatureVolume& image, const LabelMap& labels,
                                                const JitterParams& params);

std::pair<FeatureVolume, LabelMap> jitter(const FeatureVolume& image, const LabelMap& labels,
                                          std::uint64_t seed);

/// Reads <root>/images/*.png, <root>/labels/*.png (matched by stem) and classes.txt.
Dataset load_dataset(const std::filesystem::path& root);
void save_dataset(const Dataset& data, const std::filesystem::path& root);

}  // namespace sceneparse
