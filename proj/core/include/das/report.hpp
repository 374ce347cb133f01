#pragma once

// Per-run score report and its two renderings: a versioned JSON document and
// an aligned plain-text table. Floats are printed with 6 significant digits.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "das/baselines.hpp"
#include "das/evaluation.hpp"

namespace das {

inline constexpr const char* kReportSchema = "das-report/1";

struct BaselineScores {
  double ps = 0.0;
  double es = 0.0;
  std::vector<double> atc;  // aligned with ScoreReport::atc_thresholds
  std::optional<double> fd;
  std::optional<FdMode> fd_mode_used;
};

struct CheckpointScores {
  std::string checkpoint_id;
  std::int64_t index = 0;

  std::optional<double> fis;
  std::optional<double> pdr;
  std::optional<double> pdr_intra;
  std::optional<double> pdr_inter;
  std::optional<double> fis_normalized;
  std::optional<double> pdr_normalized;
  std::optional<double> das;

  std::optional<BaselineScores> baselines;
  std::optional<MapResult> map;
};

struct MetricCorrelation {
  std::string metric;
  std::optional<double> pcc;  // nullopt when undefined
  std::string note;
};

struct SelectionReport {
  std::optional<ComparisonRow> comparison;  // mAP in percent
  std::vector<MetricCorrelation> correlations;
};

struct ScoreReport {
  std::string run_id;
  double lambda = 1.0;
  double conf_thresh = 0.5;
  std::vector<double> atc_thresholds;
  std::vector<CheckpointScores> checkpoints;  // training order
  std::optional<std::string> selected_checkpoint_id;
  std::optional<std::size_t> selected_position;
  std::vector<std::string> notes;
  std::optional<SelectionReport> evaluation;
};

// Every metric series present in the report, keyed by display name
// ("FIS", "PDR", "DAS", "PS", "ES", "ATC@0.95", "FD").
struct NamedSeries {
  std::string name;
  std::vector<double> values;
};
std::vector<NamedSeries> metric_series(const ScoreReport& report);

// Last / selected / oracle comparison (maps in [0, 1], reported in percent)
// plus the correlation of every metric series with mAP.
SelectionReport selection_report(const ScoreReport& report, std::span<const double> maps);

std::string format_sig6(double value);
std::string atc_label(double threshold);

std::string to_json(const ScoreReport& report);
std::string to_table(const ScoreReport& report);
std::string comparison_table(const SelectionReport& selection);

}  // namespace das
