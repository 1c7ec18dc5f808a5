#pragma once

#include <stdexcept>
#include <string>

namespace ckn {

// All library failures are reported through this type. `code` is a short
// machine-readable tag (e.g. "parse_error", "ill_posed") that the CLI echoes.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace ckn
