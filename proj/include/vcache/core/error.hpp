#pragma once

#include <stdexcept>
#include <string>

namespace vcache {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two vehicles share a position, so the path-loss term is singular.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

/// A pair has zero data rate; latency and energy are undefined.
class Unreachable : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace vcache
