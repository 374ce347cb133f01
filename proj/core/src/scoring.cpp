#include "das/scoring.hpp"

#include <algorithm>

#include "das/error.hpp"

namespace das {

std::vector<double> min_max_normalize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyList, "nothing to normalize");
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double range = *hi - *lo;
  std::vector<double> out(values.size(), 0.5);
  if (range > 0.0) {
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - min) / range;
  }
  return out;
}

ScoreSeries make_series(std::string metric_name, std::vector<std::string> checkpoint_ids,
                        std::vector<double> raw) {
  if (checkpoint_ids.size() != raw.size()) {
    throw Error(ErrorCode::LengthMismatch, metric_name + ": ids and values differ in length");
  }
  ScoreSeries s;
  s.normalized = min_max_normalize(raw);
  s.metric_name = std::move(metric_name);
  s.checkpoint_ids = std::move(checkpoint_ids);
  s.raw = std::move(raw);
  return s;
}

std::vector<double> das_scores(std::span<const double> fis_raw, std::span<const double> pdr_raw,
                               double lambda) {
  if (fis_raw.size() != pdr_raw.size()) {
    throw Error(ErrorCode::LengthMismatch, "FIS and PDR series differ in length");
  }
  if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidArgument, "lambda must be >= 0");
  const auto f = min_max_normalize(fis_raw);
  const auto p = min_max_normalize(pdr_raw);
  std::vector<double> out(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i] + lambda * p[i];
  return out;
}

std::size_t select_best_index(std::span<const double> das_values, std::span<const double> fis_raw) {
  if (das_values.empty()) throw Error(ErrorCode::EmptyList, "no checkpoints to select from");
  if (das_values.size() != fis_raw.size()) {
    throw Error(ErrorCode::LengthMismatch, "DAS and FIS series differ in length");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < das_values.size(); ++i) {
    if (das_values[i] > das_values[best] ||
        (das_values[i] == das_values[best] && fis_raw[i] > fis_raw[best])) {
      best = i;
    }
  }
  return best;
}

std::string select_best(std::span<const double> das_values, std::span<const double> fis_raw,
                        std::span<const std::string> checkpoint_ids) {
  if (checkpoint_ids.size() != das_values.size()) {
    throw Error(ErrorCode::LengthMismatch, "ids and DAS series differ in length");
  }
  return checkpoint_ids[select_best_index(das_values, fis_raw)];
}

}  // namespace das
