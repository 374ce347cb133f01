#include "das/error.hpp"

namespace das {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::InconsistentDims: return "InconsistentDims";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::ProbabilityViolation: return "ProbabilityViolation";
    case ErrorCode::BoxViolation: return "BoxViolation";
    case ErrorCode::MissingPass: return "MissingPass";
    case ErrorCode::PassMismatch: return "PassMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::NoContributingImages: return "NoContributingImages";
    case ErrorCode::EmptyPass: return "EmptyPass";
    case ErrorCode::ImageWithoutProposals: return "ImageWithoutProposals";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::NoDetections: return "NoDetections";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::NoGroundTruth: return "NoGroundTruth";
    case ErrorCode::DegenerateVariance: return "DegenerateVariance";
    case ErrorCode::EmptyParameters: return "EmptyParameters";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace das
