#pragma once

// Checkpoint-level aggregation: min-max normalization, the Detection
// Adaptation Score and best-checkpoint selection.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace das {

inline constexpr double kDefaultLambda = 1.0;

struct ScoreSeries {
  std::string metric_name;
  std::vector<std::string> checkpoint_ids;
  std::vector<double> raw;
  std::vector<double> normalized;
};

// (v - min) / (max - min); every entry is 0.5 when all values are equal.
// Throws EmptyList.
std::vector<double> min_max_normalize(std::span<const double> values);

ScoreSeries make_series(std::string metric_name, std::vector<std::string> checkpoint_ids,
                        std::vector<double> raw);

// normalized(fis) + lambda * normalized(pdr). Throws LengthMismatch,
// InvalidArgument (lambda < 0).
std::vector<double> das_scores(std::span<const double> fis_raw, std::span<const double> pdr_raw,
                               double lambda = kDefaultLambda);

// Position (in training order) of the best checkpoint: max DAS, then higher
// raw FIS, then the earliest. Throws EmptyList, LengthMismatch.
std::size_t select_best_index(std::span<const double> das_values, std::span<const double> fis_raw);

std::string select_best(std::span<const double> das_values, std::span<const double> fis_raw,
                        std::span<const std::string> checkpoint_ids);

}  // namespace das
