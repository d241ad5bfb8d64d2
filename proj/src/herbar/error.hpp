#pragma once

#include <stdexcept>
#include <string>

namespace herbar {

enum class ErrorCode {
  InvalidArgument,
  Io,
  ImageTooSmall,
  SingularHomography,
  DegenerateConfiguration,
  TooFewFeatures,
  DuplicateName,
  BadMagic,
  UnsupportedVersion,
  TruncatedFile,
  ChecksumMismatch,
  ParseError,
  DuplicateId,
  MissingSection,
  NotFound,
  MalformedFrame,
  BehindCamera,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace herbar
