#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace shade {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed input document. `byte_offset` points at the offending byte.
class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), byte_offset_(byte_offset) {}
  std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
  std::size_t byte_offset_;
};

class OutOfRange : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public Error {
public:
  using Error::Error;
};

/// Raised when a shadow is requested while the sun is at or below the horizon.
class NightTime : public Error {
public:
  explicit NightTime(double elevation_deg)
      : Error("sun is below the horizon"), elevation_deg_(elevation_deg) {}
  double elevation_deg() const noexcept { return elevation_deg_; }

private:
  double elevation_deg_;
};

class NoRoute : public Error {
public:
  using Error::Error;
};

/// No graph node within the snap tolerance of a requested endpoint.
class SnapError : public Error {
public:
  SnapError(const std::string& what, double nearest_m)
      : Error(what), nearest_m_(nearest_m) {}
  double nearest_distance_m() const noexcept { return nearest_m_; }

private:
  double nearest_m_;
};

}  // namespace shade
