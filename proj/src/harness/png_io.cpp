#include "sceneparse/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace sceneparse {
namespace {

std::vector<std::uint8_t> read_png(const std::filesystem::path& path, std::uint32_t format, int& height, int& width) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw std::runtime_error("cannot read PNG " + path.string() + ": " + img.message);
  }
  img.format = format;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&img);
    throw std::runtime_error("cannot decode PNG " + path.string() + ": " + img.message);
  }
  height = static_cast<int>(img.height);
  width = static_cast<int>(img.width);
  return buffer;
}

void write_png(const std::filesystem::path& path, std::uint32_t format, int height, int width,
               const std::vector<std::uint8_t>& buffer) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  if (!png_image_write_to_file(&img, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw std::runtime_error("cannot write PNG " + path.string() + ": " + img.message);
  }
}

}  // namespace

FeatureVolume read_rgb_png(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  const auto buf = read_png(path, PNG_FORMAT_RGB, h, w);
  FeatureVolume image(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) image.at(c, y, x) = buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
    }
  }
  return image;
}

void write_rgb_png(const std::filesystem::path& path, const FeatureVolume& image) {
  if (image.channels() != 3) throw std::invalid_argument("write_rgb_png: expected a 3-channel image");
  const int h = image.height();
  const int w = image.width();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(h) * w * 3);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        buf[(static_cast<std::size_t>(y) * w + x) * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  write_png(path, PNG_FORMAT_RGB, h, w, buf);
}

LabelMap read_label_png(const std::filesystem::path& path) {
  int h = 0;
  int w = 0;
  const auto buf = read_png(path, PNG_FORMAT_GRAY, h, w);
  LabelMap labels(h, w);
  std::copy(buf.begin(), buf.end(), labels.data().begin());
  return labels;
}

void write_label_png(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<std::uint8_t> buf(labels.data().begin(), labels.data().end());
  write_png(path, PNG_FORMAT_GRAY, labels.height(), labels.width(), buf);
}

std::array<std::uint8_t, 3> palette_color(int cls) {
  static constexpr std::array<std::array<std::uint8_t, 3>, 12> kPalette = {{
      {128, 128, 128}, {220, 40, 40},  {40, 80, 220},  {230, 200, 40},
      {40, 170, 60},   {160, 60, 200}, {40, 200, 200}, {240, 130, 30},
      {120, 70, 30},   {250, 160, 200}, {20, 90, 60},  {200, 200, 250},
  }};
  if (cls == LabelMap::kVoid) return {0, 0, 0};
  if (cls < static_cast<int>(kPalette.size())) return kPalette[cls];
  // Deterministic spread for larger label sets.
  const auto h = static_cast<std::uint32_t>(cls) * 2654435761u;
  return {static_cast<std::uint8_t>(h >> 24), static_cast<std::uint8_t>(h >> 16), static_cast<std::uint8_t>(h >> 8)};
}

void write_palette_png(const std::filesystem::path& path, const LabelMap& labels) {
  std::vector<std::uint8_t> buf(labels.size() * 3);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = palette_color(labels[i]);
    std::copy(c.begin(), c.end(), buf.begin() + static_cast<std::ptrdiff_t>(i * 3));
  }
  write_png(path, PNG_FORMAT_RGB, labels.height(), labels.width(), buf);
}

}  // namespace sceneparse
