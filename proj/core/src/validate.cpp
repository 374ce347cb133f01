#include "das/validate.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "das/error.hpp"
#include "das/io.hpp"

namespace das {

namespace {

void add(std::vector<Finding>& out, Severity severity, const std::string& ckpt, std::string message) {
  out.push_back(Finding{severity, ckpt, std::move(message)});
}

void check_proposals(std::vector<Finding>& out, const std::string& id, const PassDump& pass, const char* label) {
  if (pass.images.empty()) {
    add(out, Severity::fatal, id, std::string("empty ") + label + " pass");
    return;
  }
  const auto without = static_cast<std::size_t>(std::count_if(
      pass.images.begin(), pass.images.end(), [](const ImageInference& im) { return im.proposals.empty(); }));
  if (without == pass.images.size()) {
    add(out, Severity::fatal, id, std::string("no proposals in ") + label + " pass");
  } else if (without > 0) {
    add(out, Severity::warning, id,
        std::to_string(without) + " image(s) without proposals excluded from " + label + " prototypes");
  }
}

bool any_surviving_detection(const PassDump& pass, double conf_thresh) {
  for (const auto& image : pass.images) {
    for (const auto& d : image.detections) {
      if (d.confidence() >= conf_thresh) return true;
    }
  }
  return false;
}

void check_run_level(std::vector<Finding>& out, std::span<const std::string> ids,
                     std::span<const std::int64_t> indices) {
  if (ids.empty()) {
    add(out, Severity::fatal, "", "run has no checkpoints");
    return;
  }
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) add(out, Severity::fatal, id, "duplicate checkpoint id");
  }
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) {
      add(out, Severity::fatal, ids[i],
          "checkpoint index " + std::to_string(indices[i]) + " does not increase (previous " +
              std::to_string(indices[i - 1]) + ")");
    }
  }
}

}  // namespace

std::vector<Finding> validate_checkpoint(const CheckpointRecord& ckpt, const RunDims& dims,
                                         const ValidationOptions& options) {
  std::vector<Finding> out;
  const auto& id = ckpt.checkpoint_id;
  const auto& original = ckpt.target_original;

  if (original.images.empty()) {
    add(out, Severity::fatal, id, "target original pass lists no images");
    return out;
  }

  if (options.scope == ValidationScope::baselines) {
    if (!any_surviving_detection(original, options.conf_thresh)) {
      add(out, Severity::fatal, id,
          "no target detection with confidence >= " + std::to_string(options.conf_thresh));
    }
    if (original.proposal_count() == 0 || !ckpt.source_proposals || ckpt.source_proposals->proposal_count() == 0) {
      add(out, Severity::warning, id, "no proposals: FD omitted");
    }
    return out;
  }

  if (ckpt.target_perturbed.empty()) {
    add(out, Severity::fatal, id, "missing perturbed pass");
  }
  std::unordered_set<std::string> original_ids;
  for (const auto& image : original.images) original_ids.insert(image.image_id);
  for (const auto& pass : ckpt.target_perturbed) {
    const auto tag = "perturbed pass " + std::to_string(pass.kind.index);
    std::unordered_set<std::string> pass_ids;
    std::size_t mismatches = 0;
    std::string example;
    for (const auto& image : pass.images) {
      pass_ids.insert(image.image_id);
      if (!original_ids.count(image.image_id)) {
        if (mismatches++ == 0) example = "'" + image.image_id + "' absent from original";
      }
    }
    for (const auto& image : original.images) {
      if (!pass_ids.count(image.image_id)) {
        if (mismatches++ == 0) example = "'" + image.image_id + "' absent from " + tag;
      }
    }
    if (mismatches > 0) {
      add(out, Severity::fatal, id,
          "pass image mismatch: " + tag + " differs from original in " + std::to_string(mismatches) +
              " image(s), e.g. " + example);
      continue;
    }
    // Same check fis() makes, without materializing the cost.
    bool contributing = false;
    for (const auto& image : pass.images) {
      const auto* orig = original.find(image.image_id);
      auto alive = [&](const ImageInference& im) {
        return std::any_of(im.detections.begin(), im.detections.end(),
                           [&](const Detection& d) { return d.confidence() >= options.conf_thresh; });
      };
      if (alive(image) && alive(*orig)) {
        contributing = true;
        break;
      }
    }
    if (!contributing) {
      add(out, Severity::fatal, id,
          "no contributing images in " + tag + " at conf_thresh " + std::to_string(options.conf_thresh));
    }
  }

  if (dims.num_classes < 2) {
    add(out, Severity::fatal, id, "single class: PDR needs K >= 2");
  }
  check_proposals(out, id, original, "target");
  if (!ckpt.source_proposals) {
    add(out, Severity::fatal, id, "missing source proposal pass");
  } else {
    check_proposals(out, id, *ckpt.source_proposals, "source");
  }
  return out;
}

std::vector<Finding> validate_run(const RunManifest& manifest, const ValidationOptions& options) {
  std::vector<Finding> out;
  std::vector<std::string> ids;
  std::vector<std::int64_t> indices;
  for (const auto& c : manifest.checkpoints) {
    ids.push_back(c.checkpoint_id);
    indices.push_back(c.index);
  }
  check_run_level(out, ids, indices);

  for (std::size_t i = 0; i < manifest.checkpoints.size(); ++i) {
    const auto& entry = manifest.checkpoints[i];
    if (!entry.target_original) {
      add(out, Severity::fatal, entry.checkpoint_id, "missing target original pass");
      continue;
    }
    try {
      auto ckpt = load_checkpoint(manifest, i);
      auto found = validate_checkpoint(ckpt, manifest.dims, options);
      out.insert(out.end(), found.begin(), found.end());
    } catch (const Error& e) {
      add(out, Severity::fatal, entry.checkpoint_id, e.what());
    }
  }
  if (manifest.ground_truth) {
    try {
      parse_ground_truth(manifest.resolve(*manifest.ground_truth), manifest.dims);
    } catch (const Error& e) {
      add(out, Severity::fatal, "", std::string("ground truth: ") + e.what());
    }
  }
  return out;
}

std::vector<Finding> validate_run(const Run& run, const ValidationOptions& options) {
  std::vector<Finding> out;
  std::vector<std::string> ids;
  std::vector<std::int64_t> indices;
  for (const auto& c : run.checkpoints) {
    ids.push_back(c.checkpoint_id);
    indices.push_back(c.index);
  }
  check_run_level(out, ids, indices);
  for (const auto& ckpt : run.checkpoints) {
    auto found = validate_checkpoint(ckpt, run.manifest.dims, options);
    out.insert(out.end(), found.begin(), found.end());
  }
  return out;
}

bool has_fatal(std::span<const Finding> findings) {
  return std::any_of(findings.begin(), findings.end(),
                     [](const Finding& f) { return f.severity == Severity::fatal; });
}

std::string describe(const Finding& f) {
  std::string s = f.severity == Severity::fatal ? "fatal" : "warning";
  if (!f.checkpoint_id.empty()) s += " [" + f.checkpoint_id + "]";
  return s + ": " + f.message;
}

}  // namespace das
