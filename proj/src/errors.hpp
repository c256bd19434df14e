#pragma once

#include <stdexcept>
#include <string>

namespace declink {

// Error categories. Values mirror the dlk_status codes in the public C header.
enum class ErrorCode : int {
  InvalidArgument = 1,
  Domain = 2,
  Dimension = 3,
  Capacity = 4,
  Parse = 5,
  Validation = 6,
  Io = 7,
  Diverged = 8,
  Internal = 9,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace declink
