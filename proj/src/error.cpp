#include "das/error.hpp"

namespace das {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::NonUnitQuaternion: return "NonUnitQuaternion";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NonPositiveZ: return "NonPositiveZ";
    case ErrorCode::GridTooLarge: return "GridTooLarge";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::FrameOutOfRange: return "FrameOutOfRange";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadKeyframes: return "BadKeyframes";
    case ErrorCode::ZeroFrames: return "ZeroFrames";
    case ErrorCode::NoForegroundPoints: return "NoForegroundPoints";
    case ErrorCode::MissingSourcePixels: return "MissingSourcePixels";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::TopologyMismatch: return "TopologyMismatch";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotAttached: return "NotAttached";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::BadHeader: return "BadHeader";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::NegativeDepth: return "NegativeDepth";
    case ErrorCode::BadMesh: return "BadMesh";
    case ErrorCode::BadJson: return "BadJson";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

}  // namespace das
