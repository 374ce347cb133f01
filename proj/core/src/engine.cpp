#include "das/engine.hpp"

#include <algorithm>

#include "das/error.hpp"
#include "das/io.hpp"
#include "das/matching.hpp"
#include "das/parallel.hpp"

namespace das {

CheckpointScores score_checkpoint(const CheckpointRecord& ckpt, const RunDims& dims,
                                  const ScoreOptions& options, const GroundTruthSet* gt) {
  CheckpointScores row;
  row.checkpoint_id = ckpt.checkpoint_id;
  row.index = ckpt.index;

  if (options.flatness_and_prototypes) {
    row.fis = fis(ckpt, options.conf_thresh);
    if (!ckpt.source_proposals) {
      throw Error(ErrorCode::MissingPass, "checkpoint '" + ckpt.checkpoint_id + "' has no source proposal pass");
    }
    const auto source = soft_prototypes(*ckpt.source_proposals, dims.num_classes, dims.feature_dim,
                                        options.prototypes);
    const auto target = soft_prototypes(ckpt.target_proposals(), dims.num_classes, dims.feature_dim,
                                        options.prototypes);
    const auto terms = pdr_terms(source, target);
    row.pdr = terms.pdr;
    row.pdr_intra = terms.intra;
    row.pdr_inter = terms.inter;
  }

  if (options.baselines) {
    BaselineScores b;
    const auto& target = ckpt.target_original;
    b.ps = baseline_ps(target, options.conf_thresh);
    b.es = baseline_es(target, options.conf_thresh);
    for (double th : options.atc_thresholds) b.atc.push_back(baseline_atc(target, th, options.conf_thresh));
    if (ckpt.source_proposals && ckpt.source_proposals->proposal_count() >= 2 && target.proposal_count() >= 2) {
      const auto fd = frechet(*ckpt.source_proposals, target, options.fd_mode);
      b.fd = fd.score;
      b.fd_mode_used = fd.mode_used;
    }
    row.baselines = std::move(b);
  }

  if (gt != nullptr) row.map = map50(ckpt.target_original, *gt, dims.num_classes);
  return row;
}

namespace {

bool is_constant(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

}  // namespace

ScoreReport assemble_report(std::string run_id, std::vector<CheckpointScores> rows, const ScoreOptions& options) {
  if (rows.empty()) throw Error(ErrorCode::EmptyList, "run has no checkpoints");
  ScoreReport report;
  report.run_id = std::move(run_id);
  report.lambda = options.lambda;
  report.conf_thresh = options.conf_thresh;
  report.atc_thresholds = options.atc_thresholds;
  report.checkpoints = std::move(rows);
  auto& cps = report.checkpoints;

  if (options.flatness_and_prototypes) {
    std::vector<double> f, p;
    std::vector<std::string> ids;
    for (const auto& r : cps) {
      f.push_back(r.fis.value());
      p.push_back(r.pdr.value());
      ids.push_back(r.checkpoint_id);
    }
    const auto fn = min_max_normalize(f);
    const auto pn = min_max_normalize(p);
    const auto das = das_scores(f, p, options.lambda);
    for (std::size_t i = 0; i < cps.size(); ++i) {
      cps[i].fis_normalized = fn[i];
      cps[i].pdr_normalized = pn[i];
      cps[i].das = das[i];
    }
    const auto best = select_best_index(das, f);
    report.selected_position = best;
    report.selected_checkpoint_id = ids[best];
    if (cps.size() == 1) {
      report.notes.push_back("degenerate normalization: single checkpoint; normalized FIS and PDR set to 0.5");
    } else {
      if (is_constant(f)) report.notes.push_back("degenerate normalization: FIS constant across checkpoints; normalized to 0.5");
      if (is_constant(p)) report.notes.push_back("degenerate normalization: PDR constant across checkpoints; normalized to 0.5");
    }
  }

  if (options.baselines) {
    if (cps.size() == 1) report.notes.push_back("degenerate normalization: single checkpoint; baseline correlations undefined");
    const bool any_fd = std::any_of(cps.begin(), cps.end(), [](const CheckpointScores& r) {
      return r.baselines && r.baselines->fd.has_value();
    });
    const bool all_fd = std::all_of(cps.begin(), cps.end(), [](const CheckpointScores& r) {
      return r.baselines && r.baselines->fd.has_value();
    });
    if (!any_fd) {
      report.notes.push_back("warning: no proposals in run; FD column omitted");
    } else if (!all_fd) {
      report.notes.push_back("warning: some checkpoints lack proposals; FD missing for them");
    }
    if (std::any_of(cps.begin(), cps.end(), [](const CheckpointScores& r) {
          return r.baselines && r.baselines->fd_mode_used == FdMode::diagonal;
        }) && options.fd_mode == FdMode::full) {
      report.notes.push_back("FD fell back to diagonal covariance: fewer than d+1 features in a domain");
    }
  }

  const bool all_maps = std::all_of(cps.begin(), cps.end(), [](const CheckpointScores& r) { return r.map.has_value(); });
  if (all_maps) {
    std::vector<double> maps;
    for (const auto& r : cps) maps.push_back(r.map->map);
    report.evaluation = selection_report(report, maps);
  }
  return report;
}

ScoreReport score_run(const Run& run, const ScoreOptions& options, const GroundTruthSet* gt) {
  std::vector<CheckpointScores> rows(run.checkpoints.size());
  parallel_for(rows.size(), options.workers, [&](std::size_t i) {
    rows[i] = score_checkpoint(run.checkpoints[i], run.manifest.dims, options, gt);
  });
  return assemble_report(run.manifest.run_id, std::move(rows), options);
}

ScoreReport score_manifest(const RunManifest& manifest, const ScoreOptions& options, const GroundTruthSet* gt) {
  std::vector<CheckpointScores> rows(manifest.checkpoints.size());
  parallel_for(rows.size(), options.workers, [&](std::size_t i) {
    rows[i] = score_checkpoint(load_checkpoint(manifest, i), manifest.dims, options, gt);
  });
  return assemble_report(manifest.run_id, std::move(rows), options);
}

}  // namespace das
