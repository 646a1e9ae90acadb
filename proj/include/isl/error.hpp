#pragma once

#include <stdexcept>
#include <string>

namespace isl {

/// Error raised by every isl module. `kind` is a stable machine-readable
/// tag (e.g. "truncated_file", "degenerate_series") used by the CLI when it
/// writes error.json.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

}  // namespace isl
