#include "isl/model/checkpoint.hpp"

#include "isl/error.hpp"
#include "isl/util/digest.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace isl::model {

namespace {

constexpr char kMagic[4] = {'I', 'S', 'L', 'C'};

void put_le(std::vector<unsigned char>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

std::uint64_t get_le(const unsigned char* in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[i]) << (8 * i);
  return v;
}

template <class T>
NamedArray to_array(const std::string& name, const T& tensor) {
  NamedArray a;
  a.name = name;
  a.rows = tensor.rows();
  a.cols = tensor.cols();
  a.values.assign(tensor.data(), tensor.data() + tensor.size());
  return a;
}

template <class T>
void from_array(const NamedArray& a, T& tensor) {
  if (a.rows != tensor.rows() || a.cols != tensor.cols()) {
    throw Error("corrupt_checkpoint", "checkpoint array " + a.name + " has shape " + std::to_string(a.rows) + "x" +
                                          std::to_string(a.cols) + ", expected " + std::to_string(tensor.rows()) +
                                          "x" + std::to_string(tensor.cols()));
  }
  std::copy(a.values.begin(), a.values.end(), tensor.data());
}

}  // namespace

const NamedArray& CheckpointData::get(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return a;
  }
  throw Error("corrupt_checkpoint", "checkpoint has no array named " + name);
}

bool CheckpointData::has(const std::string& name) const {
  for (const auto& a : arrays) {
    if (a.name == name) return true;
  }
  return false;
}

void write_checkpoint(const std::filesystem::path& path, nlohmann::json meta, const std::vector<NamedArray>& arrays,
                      Dtype dtype) {
  const std::size_t width = dtype == Dtype::f32 ? 4 : 8;
  std::vector<unsigned char> payload;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& a : arrays) {
    index.push_back({{"name", a.name},
                     {"dtype", dtype == Dtype::f32 ? "f32" : "f64"},
                     {"shape", {a.rows, a.cols}},
                     {"offset", payload.size()},
                     {"count", a.values.size()}});
    for (double v : a.values) {
      if (dtype == Dtype::f32) {
        put_le(payload, std::bit_cast<std::uint32_t>(static_cast<float>(v)), 4);
      } else {
        put_le(payload, std::bit_cast<std::uint64_t>(v), 8);
      }
    }
  }
  (void)width;
  util::Fnv1a checksum;
  checksum.update(std::as_bytes(std::span<const unsigned char>(payload.data(), payload.size())));
  meta["version"] = kCheckpointVersion;
  meta["arrays"] = index;
  meta["payload_bytes"] = payload.size();
  meta["payload_fnv1a"] = checksum.hex();
  const std::string header = meta.dump();

  std::vector<unsigned char> bytes(kMagic, kMagic + 4);
  put_le(bytes, kCheckpointVersion, 4);
  put_le(bytes, header.size(), 8);
  bytes.insert(bytes.end(), header.begin(), header.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", "write failed for checkpoint " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("io", "cannot open checkpoint " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  const std::string where = "checkpoint " + path.string();
  if (size < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error("corrupt_checkpoint", where + ": missing header");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes.data() + 4, 4));
  if (version != kCheckpointVersion) {
    throw Error("version_mismatch", where + ": format version " + std::to_string(version) + ", expected " +
                                        std::to_string(kCheckpointVersion));
  }
  const auto header_len = get_le(bytes.data() + 8, 8);
  if (16 + header_len > size) throw Error("corrupt_checkpoint", where + ": truncated header");
  CheckpointData out;
  try {
    out.meta = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<long>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_checkpoint", where + ": unreadable header: " + e.what());
  }
  const std::size_t payload_start = 16 + header_len;
  try {
    const auto payload_bytes = out.meta.at("payload_bytes").get<std::size_t>();
    if (payload_start + payload_bytes != size) {
      throw Error("corrupt_checkpoint", where + ": payload is " + std::to_string(size - payload_start) +
                                            " bytes, header declares " + std::to_string(payload_bytes));
    }
    util::Fnv1a checksum;
    checksum.update(std::as_bytes(std::span<const unsigned char>(bytes.data() + payload_start, payload_bytes)));
    if (checksum.hex() != out.meta.at("payload_fnv1a").get<std::string>()) {
      throw Error("corrupt_checkpoint", where + ": payload checksum mismatch");
    }
    for (const auto& entry : out.meta.at("arrays")) {
      NamedArray a;
      a.name = entry.at("name").get<std::string>();
      a.rows = entry.at("shape").at(0).get<Eigen::Index>();
      a.cols = entry.at("shape").at(1).get<Eigen::Index>();
      const auto count = entry.at("count").get<std::size_t>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const bool f32 = entry.at("dtype").get<std::string>() == "f32";
      const std::size_t width = f32 ? 4 : 8;
      if (count != static_cast<std::size_t>(a.rows * a.cols) || offset + count * width > payload_bytes) {
        throw Error("corrupt_checkpoint", where + ": array " + a.name + " out of bounds");
      }
      a.values.resize(count);
      const unsigned char* p = bytes.data() + payload_start + offset;
      for (std::size_t i = 0; i < count; ++i) {
        a.values[i] = f32 ? static_cast<double>(std::bit_cast<float>(static_cast<std::uint32_t>(get_le(p + 4 * i, 4))))
                          : std::bit_cast<double>(get_le(p + 8 * i, 8));
      }
      out.arrays.push_back(std::move(a));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_checkpoint", where + ": malformed header: " + e.what());
  }
  return out;
}

nlohmann::json dims_json(const EncoderConfig& config, int discriminator_hidden) {
  return {{"H", config.channels},          {"E", config.embed_dim},
          {"k", config.kernel},            {"r_t", config.stride},
          {"padding", config.padding},     {"d_se", config.resolved_se_hidden()},
          {"d_h", discriminator_hidden}};
}

EncoderConfig encoder_config_from(const nlohmann::json& dims) {
  try {
    EncoderConfig c;
    c.channels = dims.at("H").get<int>();
    c.embed_dim = dims.at("E").get<int>();
    c.kernel = dims.at("k").get<int>();
    c.stride = dims.at("r_t").get<int>();
    c.padding = dims.at("padding").get<int>();
    c.se_hidden = dims.at("d_se").get<int>();
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error("corrupt_checkpoint", std::string("checkpoint dims: ") + e.what());
  }
}

void append_encoder(std::vector<NamedArray>& out, const std::string& prefix, const EncoderParams& params) {
  EncoderParams::zip([&](std::string_view name, const auto& t) { out.push_back(to_array(prefix + std::string(name), t)); },
                     params);
}

void append_discriminator(std::vector<NamedArray>& out, const std::string& prefix, const DiscriminatorParams& params) {
  DiscriminatorParams::zip(
      [&](std::string_view name, const auto& t) { out.push_back(to_array(prefix + std::string(name), t)); }, params);
}

void read_encoder_into(const CheckpointData& ckpt, const std::string& prefix, EncoderParams& params) {
  EncoderParams::zip([&](std::string_view name, auto& t) { from_array(ckpt.get(prefix + std::string(name)), t); },
                     params);
}

void read_discriminator_into(const CheckpointData& ckpt, const std::string& prefix, DiscriminatorParams& params) {
  DiscriminatorParams::zip(
      [&](std::string_view name, auto& t) { from_array(ckpt.get(prefix + std::string(name)), t); }, params);
}

void save_encoder(const std::filesystem::path& path, const EncoderParams& params) {
  std::vector<NamedArray> arrays;
  append_encoder(arrays, "encoder.", params);
  nlohmann::json meta = {{"kind", "encoder"}, {"dims", dims_json(params.config, 0)}};
  write_checkpoint(path, std::move(meta), arrays, Dtype::f32);
}

EncoderParams load_encoder(const std::filesystem::path& path) {
  const CheckpointData ckpt = read_checkpoint(path);
  if (!ckpt.meta.contains("dims")) throw Error("corrupt_checkpoint", "checkpoint has no dims");
  EncoderParams params = EncoderParams::zeros(encoder_config_from(ckpt.meta["dims"]));
  read_encoder_into(ckpt, "encoder.", params);
  return params;
}

}  // namespace isl::model
