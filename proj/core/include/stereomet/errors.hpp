#pragma once

#include <stdexcept>
#include <string>

namespace stereomet {

/// Base class for all toolkit errors. Every failure mode documented by an
/// operation throws a subclass of this, so callers can catch broadly or
/// per-condition.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BehindCameraError : public Error {
 public:
  using Error::Error;
};

class DegenerateConfigurationError : public Error {
 public:
  using Error::Error;
};

class InsufficientViewsError : public Error {
 public:
  using Error::Error;
};

class InsufficientPointsError : public Error {
 public:
  using Error::Error;
};

class CollinearPointsError : public Error {
 public:
  using Error::Error;
};

class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

class ZeroBaselineError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatchError : public Error {
 public:
  using Error::Error;
};

class InvalidRangeError : public Error {
 public:
  using Error::Error;
};

class NonPositiveDisparityError : public Error {
 public:
  using Error::Error;
};

class EmptyInputError : public Error {
 public:
  using Error::Error;
};

class EmptySelectionError : public Error {
 public:
  using Error::Error;
};

class UndefinedPercentError : public Error {
 public:
  using Error::Error;
};

class InvalidPoseError : public Error {
 public:
  using Error::Error;
};

/// Filesystem / format failure; the message always names the offending path.
class IoError : public Error {
 public:
  IoError(const std::string& path, const std::string& detail)
      : Error(path + ": " + detail), path_(path) {}

  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

}  // namespace stereomet
