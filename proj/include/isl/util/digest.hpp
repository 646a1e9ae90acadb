#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace isl::util {

// 64-bit FNV-1a. Used for config digests and checkpoint payload checksums,
// not for anything security related.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes);
  void update(std::string_view text);
  template <class T>
  void update_value(const T& value) {
    update(std::as_bytes(std::span<const T, 1>(&value, 1)));
  }
  std::uint64_t value() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string digest_hex(std::string_view text);

// splitmix64 finalizer; combines seeds and counters into independent streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c);

}  // namespace isl::util
