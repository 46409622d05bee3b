#pragma once

#include <stdexcept>
#include <string>

namespace ordlab {

enum class ErrorKind {
  invalid_argument,  // rejected input: shape mismatch, out-of-range label, ...
  config,            // configuration file or key problems
  format,            // malformed data file
  integrity,         // checkpoint hash/truncation failure
  state,             // operation out of sequence (backward without forward)
  budget,            // refused: computed work exceeds the configured budget
  runtime,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

}  // namespace ordlab
