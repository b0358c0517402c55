#pragma once

#include "eatspeed/model.hpp"
#include "eatspeed/preprocess.hpp"

#include <filesystem>
#include <vector>

namespace eatspeed {

struct TrainingMetadata {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  std::vector<double> train_loss;
  std::vector<double> val_f1;
};

/// Everything needed to reproduce predictions: config, float weights,
/// normalization statistics and training metadata.
struct Checkpoint {
  ModelConfig config;
  std::vector<NamedTensor<float>> weights;
  NormStats norm;
  TrainingMetadata metadata;

  /// Network with these weights loaded.
  [[nodiscard]] Network<float> network() const;
  static Checkpoint from_network(const Network<float>& net, const NormStats& norm, TrainingMetadata metadata = {});
};

inline constexpr std::uint32_t kCheckpointMajorVersion = 1;
inline constexpr std::uint32_t kCheckpointMinorVersion = 0;

/// Single-file container: magic, major/minor version, a JSON header
/// (config, normalization, metadata, tensor directory) and raw little-endian
/// float32 tensor data. Files of a different major version are rejected.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
Checkpoint load_checkpoint(const std::filesystem::path& file);

/// In-memory form of the same container.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::string& bytes);

/// JSON text of a ModelConfig, and the inverse. Unknown keys are rejected;
/// missing keys keep their defaults.
std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const std::string& text);

}  // namespace eatspeed
