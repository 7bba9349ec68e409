#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace pchart {

// Base of every error raised by the library. The `code` is a stable
// machine-readable tag used by the CLI and the wire protocol.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class EvalError : public Error {
 public:
  explicit EvalError(const std::string& message) : Error("EvalError", message) {}
};

class UnknownState : public Error {
 public:
  explicit UnknownState(const std::string& what) : Error("UnknownState", "unknown state: " + what) {}
};

}  // namespace pchart
