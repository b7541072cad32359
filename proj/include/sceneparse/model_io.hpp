#pragma once

// Model file layout (little-endian):
//   "SCVR" | u32 version | u64 n + n bytes of JSON config |
//   u32 tensor count | per tensor: u32 rank, rank x u32 dims, float32 values |
//   u32 CRC-32 of every preceding byte.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sceneparse/msnet.hpp"
#include "sceneparse/purity.hpp"

namespace sceneparse {

inline constexpr std::uint32_t kModelFormatVersion = 1;

struct ModelBundle {
  std::uint32_t version = kModelFormatVersion;
  NetConfig net;
  std::vector<FilterBank> banks;
  std::vector<std::string> class_names;
  int grid = 3;
  int min_component = kDefaultMinComponent;
  std::uint64_t init_seed = 1;
  std::optional<LinearClassifier> pixel_classifier;
  std::optional<PurityClassifier> purity;

  int n_classes() const { return static_cast<int>(class_names.size()); }
  int descriptor_dims() const { return grid * grid * net.feature_dims(); }
};

class ModelFormatError : public std::runtime_error {
 public:
  enum class Kind { bad_magic, version_mismatch, checksum, malformed };
  ModelFormatError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

std::vector<std::uint8_t> encode_model(const ModelBundle& bundle);
/// Throws ModelFormatError. Tensors are restored as the float32 values that were stored.
ModelBundle decode_model(const std::vector<std::uint8_t>& bytes);

void save_model(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_model(const std::filesystem::path& path);

/// Rounds every trainable value to float32, the precision kept on disk.
void round_to_storage(ModelBundle& bundle);

}  // namespace sceneparse
