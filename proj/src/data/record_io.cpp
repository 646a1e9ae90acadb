#include "isl/data/record_io.hpp"

#include "isl/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace isl::data {

namespace {

constexpr std::array<char, 4> kMagic = {'I', 'S', 'L', '1'};
constexpr std::size_t kHeaderBytes = 16;

void put_u32(unsigned char* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<unsigned char>(v >> (8 * i));
}

std::uint32_t get_u32(const unsigned char* in) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[i]) << (8 * i);
  return v;
}

RecordShape parse_header(const unsigned char* header, const std::filesystem::path& path) {
  if (std::memcmp(header, kMagic.data(), kMagic.size()) != 0) {
    throw Error("bad_magic", "record " + path.string() + ": missing ISL1 magic");
  }
  const auto channels = get_u32(header + 4);
  const auto length = get_u32(header + 8);
  if (channels == 0 || length == 0) {
    throw Error("bad_header", "record " + path.string() + ": zero channels or length");
  }
  return {static_cast<int>(channels), static_cast<int>(length)};
}

}  // namespace

void quantize_to_float(SignalMatrix& samples) {
  samples = samples.cast<float>().cast<double>();
}

void store_record(const std::filesystem::path& path, const SignalMatrix& samples) {
  if (samples.rows() == 0 || samples.cols() == 0) {
    throw Error("invalid_argument", "store_record: empty sample matrix");
  }
  std::vector<unsigned char> bytes(kHeaderBytes + 4 * static_cast<std::size_t>(samples.size()));
  std::memcpy(bytes.data(), kMagic.data(), kMagic.size());
  put_u32(bytes.data() + 4, static_cast<std::uint32_t>(samples.rows()));
  put_u32(bytes.data() + 8, static_cast<std::uint32_t>(samples.cols()));
  put_u32(bytes.data() + 12, 0);
  unsigned char* cursor = bytes.data() + kHeaderBytes;
  for (Eigen::Index h = 0; h < samples.rows(); ++h) {
    for (Eigen::Index t = 0; t < samples.cols(); ++t) {
      put_u32(cursor, std::bit_cast<std::uint32_t>(static_cast<float>(samples(h, t))));
      cursor += 4;
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io", "store_record: cannot open " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("io", "store_record: write failed for " + path.string());
}

RecordShape read_record_shape(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io", "cannot open record " + path.string());
  std::array<unsigned char, kHeaderBytes> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw Error("truncated_file", "record " + path.string() + ": shorter than its header");
  }
  return parse_header(header.data(), path);
}

SignalMatrix load_record(const std::filesystem::path& path, std::optional<RecordShape> expected) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error("io", "cannot open record " + path.string());
  const auto file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0);
  std::vector<unsigned char> bytes(file_size);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(file_size));
  if (file_size < kHeaderBytes) {
    throw Error("truncated_file", "record " + path.string() + ": shorter than its header");
  }
  const RecordShape shape = parse_header(bytes.data(), path);
  if (expected && (expected->channels != shape.channels || expected->length != shape.length)) {
    throw Error("shape_mismatch", "record " + path.string() + ": header declares " +
                                      std::to_string(shape.channels) + "x" + std::to_string(shape.length) +
                                      ", manifest declares " + std::to_string(expected->channels) + "x" +
                                      std::to_string(expected->length));
  }
  const std::size_t payload = 4 * static_cast<std::size_t>(shape.channels) * shape.length;
  if (file_size < kHeaderBytes + payload) {
    throw Error("truncated_file", "record " + path.string() + ": expected " + std::to_string(payload) +
                                      " sample bytes, found " + std::to_string(file_size - kHeaderBytes));
  }
  SignalMatrix samples(shape.channels, shape.length);
  const unsigned char* cursor = bytes.data() + kHeaderBytes;
  for (int h = 0; h < shape.channels; ++h) {
    for (int t = 0; t < shape.length; ++t) {
      samples(h, t) = std::bit_cast<float>(get_u32(cursor));
      cursor += 4;
    }
  }
  return samples;
}

}  // namespace isl::data
