#pragma once

#include "isl/model/discriminator.hpp"
#include "isl/model/encoder.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace isl::model {

// Checkpoint file layout (all integers little-endian):
//   bytes 0..3    magic "ISLC"
//   bytes 4..7    u32 format version (kCheckpointVersion)
//   bytes 8..15   u64 header length N
//   N bytes       UTF-8 JSON header:
//                   {"version", "kind", "dims": {H, E, k, r_t, padding, d_se, d_h}, ...caller metadata...,
//                    "arrays": [{"name", "dtype": "f32"|"f64", "shape": [rows, cols], "offset", "count"}],
//                    "payload_bytes", "payload_fnv1a"}
//   payload       arrays back to back; each is `count` values in column-major order,
//                 offsets relative to the payload start.

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class Dtype { f32, f64 };

struct NamedArray {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::vector<double> values;
};

struct CheckpointData {
  nlohmann::json meta;
  std::vector<NamedArray> arrays;

  const NamedArray& get(const std::string& name) const;
  bool has(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, nlohmann::json meta, const std::vector<NamedArray>& arrays,
                      Dtype dtype);

/// Errors: "io", "corrupt_checkpoint" (bad magic, truncation, checksum),
/// "version_mismatch".
CheckpointData read_checkpoint(const std::filesystem::path& path);

nlohmann::json dims_json(const EncoderConfig& config, int discriminator_hidden);
EncoderConfig encoder_config_from(const nlohmann::json& dims);

void append_encoder(std::vector<NamedArray>& out, const std::string& prefix, const EncoderParams& params);
void append_discriminator(std::vector<NamedArray>& out, const std::string& prefix, const DiscriminatorParams& params);
void read_encoder_into(const CheckpointData& ckpt, const std::string& prefix, EncoderParams& params);
void read_discriminator_into(const CheckpointData& ckpt, const std::string& prefix, DiscriminatorParams& params);

/// Encoder-only file (kind "encoder", float32 arrays "encoder.*").
void save_encoder(const std::filesystem::path& path, const EncoderParams& params);
/// Reads the encoder from an encoder file or a training-state checkpoint.
EncoderParams load_encoder(const std::filesystem::path& path);

}  // namespace isl::model
