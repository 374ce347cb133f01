#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "das/baselines.hpp"

namespace das::cli {

// Stable process exit codes.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kScoring = 3,
  kMissingGroundTruth = 4,
  kIo = 5,
};

enum class Command { score, baselines, eval_map, corr, synth, validate };
enum class OutputFormat { doc, table };

struct CliConfig {
  Command command = Command::score;
  std::filesystem::path manifest;
  double lambda = 1.0;
  double conf_thresh = 0.5;
  std::vector<double> atc_thresholds{0.3, 0.4, 0.95};
  FdMode fd_mode = FdMode::full;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> synth_config;
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::doc;
  std::size_t workers = 1;
};

int cmd_score(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_baselines(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval_map(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_corr(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_synth(const CliConfig& config, std::ostream& out, std::ostream& err);
int cmd_validate(const CliConfig& config, std::ostream& out, std::ostream& err);

int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err);

// Parses argv (CLI11) and dispatches. Worker count comes from DAS_THREADS.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace das::cli
