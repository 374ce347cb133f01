#pragma once

#include <span>
#include <string>
#include <vector>

#include "das/matching.hpp"
#include "das/types.hpp"

namespace das {

enum class Severity { warning, fatal };

struct Finding {
  Severity severity = Severity::fatal;
  std::string checkpoint_id;  // empty for run-level findings
  std::string message;
};

// `scoring` checks every precondition of FIS and PDR; `baselines` only what
// the label-free baselines need (a target original pass with detections).
enum class ValidationScope { scoring, baselines };

struct ValidationOptions {
  double conf_thresh = kDefaultConfThresh;
  ValidationScope scope = ValidationScope::scoring;
};

std::vector<Finding> validate_checkpoint(const CheckpointRecord& ckpt, const RunDims& dims,
                                         const ValidationOptions& options = {});

// Loads every pass named by the manifest; load failures become fatal findings.
std::vector<Finding> validate_run(const RunManifest& manifest, const ValidationOptions& options = {});
std::vector<Finding> validate_run(const Run& run, const ValidationOptions& options = {});

bool has_fatal(std::span<const Finding> findings);
std::string describe(const Finding& finding);

}  // namespace das
