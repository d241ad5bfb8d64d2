#include "herbar/error.hpp"

namespace herbar {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::ImageTooSmall: return "ImageTooSmall";
    case ErrorCode::SingularHomography: return "SingularHomography";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooFewFeatures: return "TooFewFeatures";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::MissingSection: return "MissingSection";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::BehindCamera: return "BehindCamera";
  }
  return "Unknown";
}

}  // namespace herbar
