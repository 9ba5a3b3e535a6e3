#pragma once

#include <stdexcept>
#include <string>

namespace digmix {

/// Invalid configuration or arguments supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// File system or parse failure while reading or writing artifacts.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite or otherwise unusable value.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// CSV ingestion failure. The kind separates missing files from malformed content.
class CsvError : public IoError {
 public:
  enum class Kind { missing_file, ragged_row, non_numeric, non_finite, bad_label, empty };

  CsvError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace digmix
