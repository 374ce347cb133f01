#pragma once

// Domain types shared by every scoring module: detections, proposals,
// per-pass inference dumps and the run manifest that ties them together.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace das {

// Tolerance on |sum(p) - 1| below which a probability vector is silently
// renormalized; anything larger is rejected.
inline constexpr double kProbabilitySumTolerance = 1e-4;

struct BoundingBox {
  double x1 = 0.0;
  double y1 = 0.0;
  double x2 = 0.0;
  double y2 = 0.0;

  double width() const { return x2 - x1; }
  double height() const { return y2 - y1; }
  double area() const { return width() * height(); }

  // x2 > x1, y2 > y1 and all coordinates finite.
  bool valid() const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Throws Error(BoxViolation) when the box is not valid().
BoundingBox make_box(double x1, double y1, double x2, double y2);

// Non-negative entries summing to one. Construction goes through
// from_values(), which enforces the tolerance rule above.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;

  static ProbabilityVector from_values(std::vector<double> values,
                                       double tolerance = kProbabilitySumTolerance);

  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  double operator[](std::size_t i) const { return values_[i]; }

  double max() const;
  std::size_t argmax() const;

  friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

 private:
  explicit ProbabilityVector(std::vector<double> values) : values_(std::move(values)) {}

  std::vector<double> values_;
};

// A post-selection prediction. probs has K entries (foreground only).
struct Detection {
  BoundingBox bbox;
  ProbabilityVector probs;

  double confidence() const { return probs.max(); }
  // Zero-based foreground class index.
  std::size_t label() const { return probs.argmax(); }

  friend bool operator==(const Detection&, const Detection&) = default;
};

// A region proposal: d-dim pooled feature and K+1 probabilities with the
// background entry last.
struct ProposalRecord {
  std::vector<double> feature;
  ProbabilityVector probs;

  friend bool operator==(const ProposalRecord&, const ProposalRecord&) = default;
};

struct ImageInference {
  std::string image_id;
  std::vector<Detection> detections;
  std::vector<ProposalRecord> proposals;

  friend bool operator==(const ImageInference&, const ImageInference&) = default;
};

enum class Domain { source, target };

struct PassKind {
  enum class Kind { original, perturbed };
  Kind kind = Kind::original;
  std::size_t index = 0;  // perturbation draw, meaningful for perturbed passes

  static PassKind original() { return {}; }
  static PassKind perturbed(std::size_t i) { return {Kind::perturbed, i}; }
  bool is_perturbed() const { return kind == Kind::perturbed; }

  friend bool operator==(const PassKind&, const PassKind&) = default;
};

struct PassDump {
  Domain domain = Domain::target;
  PassKind kind;
  std::vector<ImageInference> images;

  // Indices of images sorted by ascending image_id.
  std::vector<std::size_t> sorted_order() const;
  const ImageInference* find(const std::string& image_id) const;
  std::size_t proposal_count() const;
  std::size_t detection_count() const;

  friend bool operator==(const PassDump&, const PassDump&) = default;
};

// One checkpoint's inference dumps. The target proposals live inside
// target_original. Missing passes are representable so validation can report
// them; scoring functions check their own preconditions.
struct CheckpointRecord {
  std::string checkpoint_id;
  std::int64_t index = 0;
  PassDump target_original;
  std::vector<PassDump> target_perturbed;
  std::optional<PassDump> source_proposals;

  const PassDump& target_proposals() const { return target_original; }
};

struct GroundTruthObject {
  BoundingBox bbox;
  int class_id = 1;  // 1..K

  friend bool operator==(const GroundTruthObject&, const GroundTruthObject&) = default;
};

struct GroundTruthSet {
  std::map<std::string, std::vector<GroundTruthObject>> images;

  std::size_t object_count() const;
  friend bool operator==(const GroundTruthSet&, const GroundTruthSet&) = default;
};

struct RunDims {
  std::size_t num_classes = 1;   // K, foreground
  std::size_t feature_dim = 1;   // d
};

// Location of one pass dump on disk, with its optional f32 feature sidecar.
struct PassFile {
  std::filesystem::path dump;
  std::optional<std::filesystem::path> features;
};

struct CheckpointEntry {
  std::string checkpoint_id;
  std::int64_t index = 0;
  std::optional<PassFile> target_original;
  std::vector<PassFile> target_perturbed;
  std::optional<PassFile> source_proposals;
};

struct RunManifest {
  std::string run_id;
  RunDims dims;
  double gamma = 1.0;
  std::vector<std::string> class_names;
  std::vector<CheckpointEntry> checkpoints;
  std::optional<std::filesystem::path> ground_truth;
  // Directory relative paths are resolved against; not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const;
};

// A fully loaded run.
struct Run {
  RunManifest manifest;
  std::vector<CheckpointRecord> checkpoints;
  std::optional<GroundTruthSet> ground_truth;
};

}  // namespace das
