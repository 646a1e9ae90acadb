#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace isl::training {

struct TrainConfig {
  double learning_rate = 3e-3;
  double weight_decay = 4e-4;
  int epochs = 40;
  int batch_size = 232;
  double temperature = 0.1;
  double lambda_d = 1.0;
  int n_frames = 10;
  int embed_dim = 256;
  int discriminator_hidden = 128;
  std::uint64_t seed = 0;
  bool kpss_cache = false;
  bool use_inter = true;  // contrastive branch
  bool use_intra = true;  // stationarity discriminator branch
  /// Frames per forward/backward chunk; 0 processes a whole batch at once.
  int frame_chunk = 0;

  /// Throws isl::Error("invalid_config").
  void validate() const;

  nlohmann::json to_json() const;
  /// Digest of every field that shapes the trajectory except `epochs`, so a
  /// run can be resumed with a larger epoch budget.
  std::string digest() const;
};

/// B=232, E=256, 40 epochs.
TrainConfig large_preset();
/// B=32, E=64, 10 epochs.
TrainConfig desk_preset();

/// Overrides fields from a flat JSON object; unknown keys are an error.
void apply_json(TrainConfig& config, const nlohmann::json& values);
void apply_config_file(TrainConfig& config, const std::filesystem::path& path);

}  // namespace isl::training
