#pragma once

// Flatness Index Score: one-to-one matching of original and perturbed
// predictions under the cost KL(p, p~) - IoU(b, b~).

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "das/types.hpp"

namespace das {

inline constexpr double kKlEpsilon = 1e-12;
inline constexpr double kDefaultConfThresh = 0.5;

double iou(const BoundingBox& a, const BoundingBox& b);

// KL(p || q) in nats. Entries are clamped to kKlEpsilon and renormalized
// before taking logs. Throws LengthMismatch.
double kl_divergence(std::span<const double> p, std::span<const double> q);
double kl_divergence(const ProbabilityVector& p, const ProbabilityVector& q);

// KL(a.probs || b.probs) - IoU(a.bbox, b.bbox); always >= -1.
double pair_cost(const Detection& a, const Detection& b);

using CostMatrix = Eigen::MatrixXd;

struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), ascending row
  double total_cost = 0.0;
};

// Minimum-cost injection of the smaller side into the larger one.
// Throws EmptyMatrix for a 0-sized matrix.
Assignment hungarian_assign(const CostMatrix& costs);

// Pairwise costs between two detection lists (rows = orig).
CostMatrix build_cost_matrix(std::span<const Detection> orig, std::span<const Detection> pert);

// Mean matched cost over min(|orig|, |pert|) pairs, nullopt when either side is empty.
std::optional<double> image_flatness_cost(std::span<const Detection> orig,
                                          std::span<const Detection> pert);

// Detections whose confidence is >= conf_thresh.
std::vector<Detection> filter_by_confidence(std::span<const Detection> dets, double conf_thresh);

struct FlatnessBreakdown {
  double fis = 0.0;
  std::vector<double> pass_mean_cost;      // one per perturbed pass
  std::vector<std::size_t> pass_images;    // contributing images per pass
};

// Per-pass mean of image costs over contributing images (ascending image_id).
// Throws NoContributingImages, PassMismatch, MissingPass.
FlatnessBreakdown flatness(const CheckpointRecord& ckpt, double conf_thresh = kDefaultConfThresh);

// -mean over perturbed passes of the per-pass mean image cost.
double fis(const CheckpointRecord& ckpt, double conf_thresh = kDefaultConfThresh);

}  // namespace das
