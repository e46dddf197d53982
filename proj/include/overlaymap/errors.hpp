#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace overlaymap {

// Invalid arguments or configuration. The CLI maps these to exit status 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Input data that cannot produce a result (empty corpus, disjoint overlay,
// malformed files). The CLI maps these to exit status 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace overlaymap
