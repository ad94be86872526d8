#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fhash {

// Root of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed argument: empty token, negative norm, m = 0, ...
class InputError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// A theorem hypothesis (or other experiment precondition) does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModeError : public Error {
 public:
  using Error::Error;
};

class CorruptModelError : public Error {
 public:
  using Error::Error;
};

// Non-finite prediction or weight during SGD.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint64_t step, std::uint32_t bucket, const std::string& what)
      : Error(what + " (step " + std::to_string(step) + ", bucket " +
              std::to_string(bucket) + ")"),
        step_(step),
        bucket_(bucket) {}

  std::uint64_t step() const noexcept { return step_; }
  std::uint32_t bucket() const noexcept { return bucket_; }

 private:
  std::uint64_t step_;
  std::uint32_t bucket_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line_no, const std::string& what)
      : Error("line " + std::to_string(line_no) + ": " + what), line_no_(line_no) {}

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace fhash
