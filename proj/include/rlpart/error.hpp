#pragma once

#include <stdexcept>
#include <string>

namespace rlpart {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Partition metric requested on a bisection/separator with an empty part.
struct DegeneratePartitionError : Error {
  using Error::Error;
};

// A separator labeling with a direct A-B edge.
struct InvalidSeparatorError : Error {
  using Error::Error;
};

struct InvalidInputError : Error {
  using Error::Error;
};

struct DisconnectedInputError : Error {
  using Error::Error;
};

struct DimensionMismatchError : Error {
  using Error::Error;
};

// Every candidate action is masked.
struct AllMaskedError : Error {
  using Error::Error;
};

// Attempt to remove an essential node from a separator.
struct EssentialNodeError : Error {
  using Error::Error;
};

struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  long line_number;
};

struct VersionMismatchError : Error {
  using Error::Error;
};

struct CorruptFileError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace rlpart
