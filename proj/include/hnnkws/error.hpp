#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hnnkws {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments, configuration or precondition (staging, env mismatch,
// strategy/mode mismatch).
class ConfigError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  ShapeError(std::size_t layer_index, const std::string& what)
      : Error("layer " + std::to_string(layer_index) + ": " + what),
        layer_index_(layer_index) {}

  std::size_t layer_index() const noexcept { return layer_index_; }

 private:
  std::size_t layer_index_;
};

// Non-finite gradients or parameters.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized data. `offset` is the byte position where parsing failed.
class FormatError : public IoError {
 public:
  FormatError(std::size_t offset, const std::string& what)
      : IoError("byte " + std::to_string(offset) + ": " + what), offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace hnnkws
