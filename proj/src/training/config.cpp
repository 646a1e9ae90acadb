#include "isl/training/config.hpp"

#include "isl/error.hpp"
#include "isl/util/digest.hpp"

#include <fstream>

namespace isl::training {

using nlohmann::json;

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid_config", what); };
  if (!(learning_rate >= 0)) fail("learning_rate must be non-negative");
  if (!(weight_decay >= 0)) fail("weight_decay must be non-negative");
  if (epochs < 1) fail("epochs must be at least 1");
  if (batch_size < 2) fail("batch_size must be at least 2");
  if (!(temperature > 0)) fail("temperature must be positive");
  if (!(lambda_d >= 0)) fail("lambda_d must be non-negative");
  if (n_frames < 2) fail("n_frames must be at least 2");
  if (embed_dim < 1) fail("embed_dim must be positive");
  if (discriminator_hidden < 1) fail("discriminator_hidden must be positive");
  if (frame_chunk < 0) fail("frame_chunk must be non-negative");
  if (!use_inter && !use_intra) fail("no loss remains with both --no-inter and --no-intra");
}

json TrainConfig::to_json() const {
  return {{"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"temperature", temperature},
          {"lambda_d", lambda_d},
          {"n_frames", n_frames},
          {"embed_dim", embed_dim},
          {"discriminator_hidden", discriminator_hidden},
          {"seed", seed},
          {"kpss_cache", kpss_cache},
          {"use_inter", use_inter},
          {"use_intra", use_intra},
          {"frame_chunk", frame_chunk}};
}

std::string TrainConfig::digest() const {
  json j = to_json();
  j.erase("epochs");
  j.erase("kpss_cache");
  j.erase("frame_chunk");
  return util::digest_hex(j.dump());
}

TrainConfig large_preset() { return TrainConfig{}; }

TrainConfig desk_preset() {
  TrainConfig c;
  c.batch_size = 32;
  c.epochs = 10;
  c.embed_dim = 64;
  return c;
}

void apply_json(TrainConfig& c, const json& values) {
  if (!values.is_object()) throw Error("invalid_config", "config must be a JSON object");
  for (const auto& [key, v] : values.items()) {
    try {
      if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "temperature") c.temperature = v.get<double>();
      else if (key == "lambda_d") c.lambda_d = v.get<double>();
      else if (key == "n_frames") c.n_frames = v.get<int>();
      else if (key == "embed_dim") c.embed_dim = v.get<int>();
      else if (key == "discriminator_hidden") c.discriminator_hidden = v.get<int>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "kpss_cache") c.kpss_cache = v.get<bool>();
      else if (key == "use_inter") c.use_inter = v.get<bool>();
      else if (key == "use_intra") c.use_intra = v.get<bool>();
      else if (key == "frame_chunk") c.frame_chunk = v.get<int>();
      else throw Error("invalid_config", "unknown config key: " + key);
    } catch (const json::exception& e) {
      throw Error("invalid_config", "bad value for " + key + ": " + e.what());
    }
  }
}

void apply_config_file(TrainConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("invalid_config", path.string() + ": " + e.what());
  }
  apply_json(config, j);
}

}  // namespace isl::training
