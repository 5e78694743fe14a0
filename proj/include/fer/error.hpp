#pragma once

#include <stdexcept>
#include <string>

namespace fer {

// Data, configuration and argument problems. The CLI maps these to exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& detail, long line)
      : Error(detail + " (line " + std::to_string(line) + ")"), detail_(detail), line_(line) {}
  long line() const noexcept { return line_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  long line_;
};

class IntegrityError : public Error {
 public:
  using Error::Error;
};

class StreamUnavailableError : public Error {
 public:
  using Error::Error;
};

class UnsupportedRateError : public Error {
 public:
  using Error::Error;
};

class WindowRangeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Broken internal invariant. The CLI maps this to exit 3.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace fer
