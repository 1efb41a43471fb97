#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace gbps {

// Error category, mapped to process exit codes by the CLI
// (validation -> 1, runtime -> 2).
enum class ErrorKind { validation, runtime };

// All library failures surface as gbps::Error. `code()` is a short
// machine-parsable tag ("io", "parse", "dimension", ...) used in the
// CLI's `ERROR[<code>]:` lines and in the C API error strings.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] inline void fail_validation(const std::string& code, const std::string& message) {
  throw Error(ErrorKind::validation, code, message);
}

[[noreturn]] inline void fail_runtime(const std::string& code, const std::string& message) {
  throw Error(ErrorKind::runtime, code, message);
}

}  // namespace gbps
