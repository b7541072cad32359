#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "sceneparse/label_map.hpp"
#include "sceneparse/volume.hpp"

namespace sceneparse {

/// 8-bit RGB PNG as a 3 x H x W volume with values v / 255.
FeatureVolume read_rgb_png(const std::filesystem::path& path);
/// Values are clamped to [0, 1] and rounded to 8 bits.
void write_rgb_png(const std::filesystem::path& path, const FeatureVolume& image);

/// 8-bit single-channel PNG holding class indices.
LabelMap read_label_png(const std::filesystem::path& path);
void write_label_png(const std::filesystem::path& path, const LabelMap& labels);

/// Fixed colour for a class index; void is black.
std::array<std::uint8_t, 3> palette_color(int cls);
void write_palette_png(const std::filesystem::path& path, const LabelMap& labels);

}  // namespace sceneparse
