#pragma once

// Label-free baseline scores. Every score is oriented "higher = predicted
// better": entropy and Frechet distance are negated.

#include "das/matching.hpp"
#include "das/types.hpp"

namespace das {

enum class FdMode { full, diagonal };

// Mean max-class probability over detections with confidence >= conf_thresh.
// Throws NoDetections.
double baseline_ps(const PassDump& dump, double conf_thresh = kDefaultConfThresh);

// Negated mean Shannon entropy (nats, epsilon-clamped) of surviving detections.
double baseline_es(const PassDump& dump, double conf_thresh = kDefaultConfThresh);

// Fraction of surviving detections, pooled over images, with confidence > threshold.
double baseline_atc(const PassDump& dump, double threshold, double conf_thresh = kDefaultConfThresh);

struct FrechetResult {
  double score = 0.0;  // negated distance
  FdMode mode_used = FdMode::full;
};

// Negated Frechet distance between Gaussians fit to the pooled proposal
// features of each pass. Full covariance falls back to diagonal when either
// domain has fewer than d + 1 features. Throws InsufficientSamples.
FrechetResult frechet(const PassDump& source_props, const PassDump& target_props,
                      FdMode mode = FdMode::full);
double baseline_fd(const PassDump& source_props, const PassDump& target_props,
                   FdMode mode = FdMode::full);

}  // namespace das
