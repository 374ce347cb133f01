#pragma once

// Ground-truth oracle used to validate the label-free scores: VOC-style
// mAP@0.5 with all-point interpolation, Pearson correlation, and the
// last / selected / oracle comparison.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "das/types.hpp"

namespace das {

inline constexpr double kMatchIou = 0.5;

struct PRCurve {
  std::vector<double> confidence;  // descending
  std::vector<char> true_positive;
  std::vector<double> precision;
  std::vector<double> recall;
  std::size_t num_ground_truth = 0;
};

// Detections of `class_index` (zero-based foreground label) against ground
// truth of class_id = class_index + 1. Ties in confidence are broken by
// (image_id, detection index).
PRCurve pr_curve(const PassDump& dump, const GroundTruthSet& gt, std::size_t class_index,
                 double iou_threshold = kMatchIou);

// Area under the precision envelope.
double average_precision(const PRCurve& curve);

struct MapResult {
  double map = 0.0;
  std::vector<std::optional<double>> ap_per_class;  // nullopt: class has no ground truth
};

// Throws NoGroundTruth when no class has a ground-truth instance.
MapResult map50(const PassDump& dump, const GroundTruthSet& gt, std::size_t num_classes);

struct CorrelationResult {
  double pcc = 0.0;
  std::size_t n = 0;
};

// Sample Pearson correlation. Throws LengthMismatch, DegenerateVariance,
// InvalidArgument (fewer than two samples).
CorrelationResult pearson(std::span<const double> x, std::span<const double> y);

struct ComparisonRow {
  double last = 0.0;
  double selected = 0.0;
  double improvement = 0.0;
  double oracle = 0.0;
  std::size_t selected_index = 0;
  std::size_t oracle_index = 0;
};

// maps are in training order; the last entry is the last checkpoint.
// Throws EmptyList, InvalidArgument (selected_index out of range).
ComparisonRow compare_selection(std::span<const double> maps, std::size_t selected_index);

// "+5.85", "-1.20", "+0.00": signed, two decimals.
std::string format_improvement(double delta);

}  // namespace das
