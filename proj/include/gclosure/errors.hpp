#pragma once

#include <stdexcept>
#include <string>

namespace gclosure {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// Raised by unsmoothed distance densities when the nearest atom is ambiguous.
class MedialAxis : public Error {
 public:
  using Error::Error;
};

class NonIntegralFraction : public Error {
 public:
  using Error::Error;
};

class IndivisibleScale : public Error {
 public:
  using Error::Error;
};

class InvalidFraction : public Error {
 public:
  using Error::Error;
};

class CGStalled : public Error {
 public:
  CGStalled(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace gclosure
