#pragma once

// Small builders for hand-written test inputs.

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <random>
#include <string>
#include <vector>

#include "das/types.hpp"

namespace das::fixture {

inline ProbabilityVector probs(std::initializer_list<double> v) { return ProbabilityVector::from_values(v); }

inline Detection det(BoundingBox box, std::initializer_list<double> p) { return {box, probs(p)}; }

inline ProposalRecord proposal(std::vector<double> feature, std::initializer_list<double> p) {
  return {std::move(feature), probs(p)};
}

inline ImageInference image(std::string id, std::vector<Detection> dets, std::vector<ProposalRecord> props = {}) {
  return {std::move(id), std::move(dets), std::move(props)};
}

inline PassDump pass(std::vector<ImageInference> images, Domain domain = Domain::target,
                     PassKind kind = PassKind::original()) {
  PassDump p;
  p.domain = domain;
  p.kind = kind;
  p.images = std::move(images);
  return p;
}

inline CheckpointRecord checkpoint(PassDump original, std::vector<PassDump> perturbed,
                                   std::string id = "ckpt", std::int64_t index = 1) {
  CheckpointRecord c;
  c.checkpoint_id = std::move(id);
  c.index = index;
  c.target_original = std::move(original);
  c.target_perturbed = std::move(perturbed);
  return c;
}

// Random probability vector of length n with entries bounded away from zero.
inline std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& x : v) s += (x = u(rng));
  for (auto& x : v) x /= s;
  return v;
}

inline BoundingBox random_box(std::mt19937_64& rng, double extent = 100.0) {
  std::uniform_real_distribution<double> pos(0.0, extent);
  std::uniform_real_distribution<double> size(5.0, extent / 2);
  const double x = pos(rng), y = pos(rng);
  return {x, y, x + size(rng), y + size(rng)};
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("das-test-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace das::fixture
