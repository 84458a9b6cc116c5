#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace iwv {

// Base class for all toolkit errors. Subclasses map to CLI exit codes:
// ConfigError/ShapeError -> 2, ParseError/DataError/IoError -> 3,
// NumericsError -> 4.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Inconsistent or invalid configuration (wiring bugs, bad dimensions,
// unknown names).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem-level failure (missing or unreadable file).
class IoError : public Error {
 public:
  using Error::Error;
};

// Tensor shape incompatible with a model or batch.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Malformed input file. `location` is a byte offset for binary formats and
// a 1-based line number for text formats.
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& msg) : Error(msg) {}
  ParseError(const std::string& msg, std::uint64_t location)
      : Error(msg + " (at " + std::to_string(location) + ")"), location_(location) {}
  const std::optional<std::uint64_t>& location() const { return location_; }

 private:
  std::optional<std::uint64_t> location_;
};

// Structurally valid input whose content violates a contract (empty corpus,
// label outside the tag set, ...). `index` points at the offending record.
class DataError : public Error {
 public:
  explicit DataError(const std::string& msg) : Error(msg) {}
  DataError(const std::string& msg, std::uint64_t index)
      : Error(msg + " (index " + std::to_string(index) + ")"), index_(index) {}
  const std::optional<std::uint64_t>& index() const { return index_; }

 private:
  std::optional<std::uint64_t> index_;
};

// Non-finite values produced during training.
class NumericsError : public Error {
 public:
  explicit NumericsError(const std::string& msg) : Error(msg) {}
  NumericsError(const std::string& msg, int epoch)
      : Error(msg + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  const std::optional<int>& epoch() const { return epoch_; }

 private:
  std::optional<int> epoch_;
};

}  // namespace iwv
