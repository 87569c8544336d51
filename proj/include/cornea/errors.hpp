#pragma once

#include <stdexcept>
#include <string>

namespace cornea {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Input has no usable structure (e.g. a constant image handed to Otsu).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class NoFaceError : public Error {
 public:
  NoFaceError() : Error("no face found in frame") {}
  using Error::Error;
};

class NoIrisError : public Error {
 public:
  using Error::Error;
};

class EmptyReflectionError : public Error {
 public:
  using Error::Error;
};

// The geometry predicts a reflection too small to resolve on the sensor.
class GeometryTooSmallError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

namespace detail {
inline void require(bool cond, const std::string& what) {
  if (!cond) throw ParameterError(what);
}
}  // namespace detail

}  // namespace cornea
