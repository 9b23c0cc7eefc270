#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mindlink {

// Root of every error thrown by the library. The CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid argument or configuration value.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Index outside the valid range of a recording or stream.
class BoundsError : public Error {
 public:
  using Error::Error;
};

// Inputs that are individually valid but do not agree with each other.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class ConfigurationError : public Error {
 public:
  using Error::Error;
};

class ComputationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed text file. Line numbers are 1-based and count the header row.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Character that cannot be carried by an 8-bit ASCII frame.
class EncodingError : public Error {
 public:
  EncodingError(std::size_t position, const std::string& what)
      : Error(what), position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// No frame header could be located in a sample stream.
class SyncError : public Error {
 public:
  using Error::Error;
};

// A header was found but the stream ended before the payload was complete.
class TruncationError : public Error {
 public:
  TruncationError(std::size_t bits_recovered, const std::string& partial_text)
      : Error("stream truncated after header: " + std::to_string(bits_recovered) +
              " of 8 payload bits recovered"),
        bits_recovered_(bits_recovered),
        partial_text_(partial_text) {}

  std::size_t bits_recovered() const noexcept { return bits_recovered_; }
  // Text decoded from the complete frames preceding the truncated one.
  const std::string& partial_text() const noexcept { return partial_text_; }

 private:
  std::size_t bits_recovered_;
  std::string partial_text_;
};

}  // namespace mindlink
