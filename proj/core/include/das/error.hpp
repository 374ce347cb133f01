#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace das {

enum class ErrorCode {
  MalformedManifest,
  MissingFile,
  InconsistentDims,
  MalformedRecord,
  ProbabilityViolation,
  BoxViolation,
  MissingPass,
  PassMismatch,
  LengthMismatch,
  EmptyMatrix,
  NoContributingImages,
  EmptyPass,
  ImageWithoutProposals,
  DimMismatch,
  SingleClass,
  EmptyList,
  NoDetections,
  InsufficientSamples,
  NoGroundTruth,
  DegenerateVariance,
  EmptyParameters,
  InvalidArgument,
  Io,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  // Message without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace das
