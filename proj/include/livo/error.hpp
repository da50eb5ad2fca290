#pragma once

#include <stdexcept>
#include <string>

namespace livo {

/// Base of every error thrown by the toolkit. `kind()` is a stable short tag
/// used for the CLI's machine-parsable error line.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
};

class BehindCameraError : public DomainError {
 public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "behind_camera"; }
};

class OrderingError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "ordering"; }
};

class ImuGapError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "imu_gap"; }
};

class BufferOverflowError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "buffer_overflow"; }
};

class ParseError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "parse"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

class InsufficientOverlapError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "insufficient_overlap"; }
};

class DegenerateGeometryError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate_geometry"; }
};

}  // namespace livo
