#pragma once

// Wire format.
//
// Manifest: one JSON document (schema "das-run/1") naming K, d, gamma, the
// class names and, per checkpoint, the pass dump files.
//
// Pass dump: JSON Lines, one image per line:
//   {"image_id": "...",
//    "detections": [{"bbox": [x1, y1, x2, y2], "probs": [K values]}],
//    "proposals":  [{"feature": [d values] | "feature_ref": {"offset": o, "count": d},
//                    "probs": [K+1 values, background last]}]}
// feature_ref points into a sidecar of little-endian float32 values
// (offset and count in elements).
//
// Ground truth: JSON Lines, {"image_id": "...", "objects": [{"bbox": [...], "class_id": k}]}
// with class_id in 1..K.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "das/types.hpp"

namespace das {

inline constexpr const char* kManifestSchema = "das-run/1";

RunManifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);

PassDump parse_pass_dump(std::istream& in, std::span<const float> sidecar, const RunDims& dims,
                         Domain domain, PassKind kind, const std::string& source_name = "<stream>");
PassDump parse_pass_dump(const PassFile& file, const RunDims& dims, Domain domain, PassKind kind);

// Writes features inline, or into file.features when it is set.
void write_pass_dump(const PassDump& pass, const PassFile& file);
void write_pass_dump(const PassDump& pass, std::ostream& out);

GroundTruthSet parse_ground_truth(std::istream& in, const RunDims& dims,
                                  const std::string& source_name = "<stream>");
GroundTruthSet parse_ground_truth(const std::filesystem::path& path, const RunDims& dims);
void write_ground_truth(const GroundTruthSet& gt, const std::filesystem::path& path);

std::vector<float> read_feature_sidecar(const std::filesystem::path& path);

// Loads every pass referenced by checkpoint `i`. Absent passes stay absent
// (empty perturbed list, no source proposals); parse errors propagate.
CheckpointRecord load_checkpoint(const RunManifest& manifest, std::size_t i);

Run load_run(const RunManifest& manifest);
Run load_run(const std::filesystem::path& manifest_path);

struct RunWriteOptions {
  bool binary_features = false;
};

// Writes a loaded run under `dir` using the standard layout
// (manifest.json, ground_truth.jsonl, <checkpoint>/<pass>.jsonl) and returns
// the manifest as written.
RunManifest write_run(const Run& run, const std::filesystem::path& dir,
                      const RunWriteOptions& options = {});

}  // namespace das
