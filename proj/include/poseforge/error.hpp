#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace poseforge {

enum class ErrorCode {
  // geometry
  DegenerateRotation,
  InvalidRotation,
  BehindCamera,
  NonPositiveDepth,
  InvalidIntrinsics,
  // mesh
  ParseError,
  UnsupportedFormat,
  TooFewVertices,
  EmptyMesh,
  EmptyPointSet,
  // metrics / losses
  NonPositiveDiameter,
  UnknownObjectId,
  InvalidContext,
  NonPositiveGroundTruthDepth,
  SingularPoint,
  // bop_io
  MissingFile,
  JsonError,
  InconsistentKeys,
  IoError,
  NonWritableDir,
  CsvError,
  FieldCountError,
  NonFiniteNumber,
  // augment / scenegen
  InvalidRange,
  DimensionMismatch,
  PlacementFailure,
  CameraSamplingFailure,
  InvalidConfig,
  // postprocess
  InvalidBox,
  InvalidThreshold,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateRotation: return "DegenerateRotation";
    case ErrorCode::InvalidRotation: return "InvalidRotation";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TooFewVertices: return "TooFewVertices";
    case ErrorCode::EmptyMesh: return "EmptyMesh";
    case ErrorCode::EmptyPointSet: return "EmptyPointSet";
    case ErrorCode::NonPositiveDiameter: return "NonPositiveDiameter";
    case ErrorCode::UnknownObjectId: return "UnknownObjectId";
    case ErrorCode::InvalidContext: return "InvalidContext";
    case ErrorCode::NonPositiveGroundTruthDepth: return "NonPositiveGroundTruthDepth";
    case ErrorCode::SingularPoint: return "SingularPoint";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::JsonError: return "JsonError";
    case ErrorCode::InconsistentKeys: return "InconsistentKeys";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::NonWritableDir: return "NonWritableDir";
    case ErrorCode::CsvError: return "CsvError";
    case ErrorCode::FieldCountError: return "FieldCountError";
    case ErrorCode::NonFiniteNumber: return "NonFiniteNumber";
    case ErrorCode::InvalidRange: return "InvalidRange";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::CameraSamplingFailure: return "CameraSamplingFailure";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidBox: return "InvalidBox";
    case ErrorCode::InvalidThreshold: return "InvalidThreshold";
  }
  return "Unknown";
}

/// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace poseforge
