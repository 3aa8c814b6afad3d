#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wbrf {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  ComponentUnderflow,
  DegenerateImage,
  DegenerateColor,
  RankDeficient,
  InsufficientData,
  FormatVersionMismatch,
  CorruptFile,
  OutOfBoundsPixel,
  AllPixelsDegenerate,
  EmptyList,
  NoPairsFound,
  IoError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid argument";
    case ErrorCode::DimensionMismatch: return "dimension mismatch";
    case ErrorCode::ComponentUnderflow: return "component underflow";
    case ErrorCode::DegenerateImage: return "degenerate image";
    case ErrorCode::DegenerateColor: return "degenerate color";
    case ErrorCode::RankDeficient: return "rank deficient";
    case ErrorCode::InsufficientData: return "insufficient data";
    case ErrorCode::FormatVersionMismatch: return "format version mismatch";
    case ErrorCode::CorruptFile: return "corrupt file";
    case ErrorCode::OutOfBoundsPixel: return "out of bounds pixel";
    case ErrorCode::AllPixelsDegenerate: return "all pixels degenerate";
    case ErrorCode::EmptyList: return "empty list";
    case ErrorCode::NoPairsFound: return "no pairs found";
    case ErrorCode::IoError: return "i/o error";
  }
  return "unknown error";
}

/// Exception carrying a machine-checkable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wbrf
