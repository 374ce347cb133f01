#pragma once

// Scores every checkpoint of a run and assembles the report.

#include <optional>
#include <vector>

#include "das/baselines.hpp"
#include "das/prototypes.hpp"
#include "das/report.hpp"
#include "das/scoring.hpp"
#include "das/types.hpp"

namespace das {

struct ScoreOptions {
  double lambda = kDefaultLambda;
  double conf_thresh = kDefaultConfThresh;
  std::vector<double> atc_thresholds{0.3, 0.4, 0.95};
  FdMode fd_mode = FdMode::full;
  bool flatness_and_prototypes = true;  // FIS, PDR and DAS
  bool baselines = false;
  PrototypeOptions prototypes;
  std::size_t workers = 1;
};

// Raw scores for one checkpoint; normalization happens in assemble_report.
// With ground truth, also the mAP@0.5 of the target original pass.
CheckpointScores score_checkpoint(const CheckpointRecord& ckpt, const RunDims& dims,
                                  const ScoreOptions& options, const GroundTruthSet* gt = nullptr);

// Normalizes FIS/PDR across checkpoints, computes DAS and the selection, and
// the evaluation section when every row carries an mAP.
ScoreReport assemble_report(std::string run_id, std::vector<CheckpointScores> rows,
                            const ScoreOptions& options);

ScoreReport score_run(const Run& run, const ScoreOptions& options, const GroundTruthSet* gt = nullptr);

// Loads checkpoints lazily, one at a time per worker.
ScoreReport score_manifest(const RunManifest& manifest, const ScoreOptions& options,
                           const GroundTruthSet* gt = nullptr);

}  // namespace das
