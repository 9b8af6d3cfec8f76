#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace das {

enum class ErrorCode {
  // geometry
  InvalidIntrinsics,
  NonUnitQuaternion,
  NonPositiveDepth,
  NonPositiveZ,
  GridTooLarge,
  InvalidArgument,
  // render
  SizeMismatch,
  FrameOutOfRange,
  LengthMismatch,
  // builders
  BadKeyframes,
  ZeroFrames,
  NoForegroundPoints,
  MissingSourcePixels,
  EmptyMesh,
  TopologyMismatch,
  // pose metrics
  TooFewCorrespondences,
  DegenerateConfiguration,
  DimensionMismatch,
  // toy conditioning
  BadConfig,
  ShapeMismatch,
  NotAttached,
  // io
  BadMagic,
  BadHeader,
  TruncatedFile,
  VersionUnsupported,
  NonFiniteValue,
  NegativeDepth,
  BadMesh,
  BadJson,
  IoFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a stable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace das
