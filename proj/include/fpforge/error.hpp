#pragma once

#include <stdexcept>
#include <string>

namespace fpforge {

// Broad failure classes; the CLI maps each one to a distinct exit code.
enum class ErrorKind { validation, io, format, calibration };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::validation, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Malformed or unsupported file content. The reason distinguishes the cases
// callers care about (bad magic, truncation, ...).
class FormatError : public Error {
 public:
  enum class Reason { bad_magic, bad_version, truncated, dimension_mismatch, unsupported };

  FormatError(Reason reason, const std::string& what)
      : Error(ErrorKind::format, what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, double psnr_low, double psnr_high)
      : Error(ErrorKind::calibration, what), psnr_low_(psnr_low), psnr_high_(psnr_high) {}

  // Range of mean PSNR values the search actually reached.
  double psnr_low() const noexcept { return psnr_low_; }
  double psnr_high() const noexcept { return psnr_high_; }

 private:
  double psnr_low_;
  double psnr_high_;
};

}  // namespace fpforge
