#pragma once

#include <stdexcept>
#include <string>

namespace cimsim {

// Base class so callers can catch everything from this library in one place.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Mismatched vector lengths / grid dimensions.
struct ShapeError : Error {
  using Error::Error;
};

// A value outside its declared domain (bit widths, plane indices, ...).
struct RangeError : Error {
  using Error::Error;
};

// Bad or inconsistent configuration (mode/shape mismatches included).
struct ConfigError : Error {
  using Error::Error;
};

// Checked integer arithmetic overflowed.
struct OverflowError : Error {
  using Error::Error;
};

// recombine() was handed a grid with missing plane pairs.
struct IncompleteGridError : Error {
  using Error::Error;
};

// A closed-form helper was asked about a config outside its preconditions.
struct NotApplicableError : Error {
  using Error::Error;
};

// Malformed model/dataset/config file.
struct SchemaError : Error {
  using Error::Error;
};

}  // namespace cimsim
