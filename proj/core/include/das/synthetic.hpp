#pragma once

// Synthetic detector family for end-to-end testing without a deep-learning
// stack. A linear softmax "head" classifies latent object features drawn from
// class- and domain-conditional Gaussians; checkpoints differ by how far the
// head has drifted toward a misaligned matrix (degradation) and by the logit
// gain (sharpness).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "das/io.hpp"
#include "das/types.hpp"

namespace das {

struct ToyDetectorParams {
  Eigen::MatrixXd weights;  // (K+1) x d, background row last
  Eigen::VectorXd bias;     // K+1
  double box_gain = 1.0;
  double sharpness = 1.0;   // logit gain, > 0; not part of the perturbed vector

  // theta = [weights row-major, bias, box_gain]
  std::vector<double> flatten() const;
  static ToyDetectorParams unflatten(std::span<const double> theta, std::size_t num_classes,
                                     std::size_t feature_dim, double sharpness);
};

struct SyntheticConfig {
  std::size_t num_classes = 5;
  std::size_t feature_dim = 32;
  std::size_t images_per_domain = 200;
  std::size_t min_objects = 1;
  std::size_t max_objects = 4;
  std::size_t proposals_per_object = 4;
  std::size_t background_proposals = 2;  // per image

  double class_separation = 4.0;  // distance between any two class means
  double domain_shift = 1.0;      // target means = source means + shift * u
  double feature_noise = 1.0;     // per-dimension std of latent features
  double proposal_noise = 0.5;    // per-dimension std of proposal jitter around the latent
  double box_noise = 2.0;         // pixels
  double background_bias = 1.5;

  double image_width = 640.0;
  double image_height = 480.0;
  double min_box = 32.0;
  double max_box = 160.0;

  std::size_t trajectory_length = 10;
  double drift_start = 0.0;
  double drift_end = 0.8;
  double sharpness_start = 1.0;
  double sharpness_end = 3.0;
  // Explicit per-checkpoint schedules; override the linear ramps when non-empty.
  std::vector<double> drift_schedule;
  std::vector<double> sharpness_schedule;

  double gamma = 1.0;
  std::size_t perturbations = 1;
  std::size_t iteration_step = 1000;  // index_t = (t + 1) * iteration_step
  bool binary_features = false;       // write proposal features to f32 sidecars
  std::uint64_t seed = 0;

  std::vector<double> drift() const;
  std::vector<double> sharpness() const;
  // Throws InvalidArgument.
  void check() const;
};

SyntheticConfig synthetic_config_from_json(const std::string& text);
SyntheticConfig load_synthetic_config(const std::filesystem::path& path);
std::string to_json(const SyntheticConfig& config);

struct SceneObject {
  int class_id = 1;  // 1..K
  BoundingBox box;
  Eigen::VectorXd latent;
};

struct SyntheticScene {
  std::string image_id;
  Domain domain = Domain::target;
  std::size_t image_index = 0;
  std::vector<SceneObject> objects;
  std::vector<Eigen::VectorXd> background;  // background proposal latents
};

struct Scenario {
  std::vector<SyntheticScene> source;
  std::vector<SyntheticScene> target;
  GroundTruthSet target_truth;
  Eigen::MatrixXd source_means;  // K x d
  Eigen::MatrixXd target_means;  // K x d
};

// theta + gamma * g / ||g|| with g standard Gaussian keyed by seed.
// gamma = 0 returns theta unchanged. Throws EmptyParameters, InvalidArgument.
std::vector<double> perturb_parameters(std::span<const double> theta, double gamma, std::uint64_t seed);

Scenario generate_scenario(const SyntheticConfig& config);

// Head whose foreground rows point at the source class means.
ToyDetectorParams aligned_detector(const SyntheticConfig& config, const Scenario& scenario, double sharpness);

// Unit-norm random foreground rows, zero background row.
Eigen::MatrixXd misaligned_weights(const SyntheticConfig& config);

// (1 - drift) * aligned + drift * misaligned on the foreground rows.
ToyDetectorParams drifted_detector(const SyntheticConfig& config, const Scenario& scenario, double drift,
                                   double sharpness);

struct ToyPassOptions {
  bool detections = true;
  bool proposals = true;
};

// Runs the toy head over scenes. Proposal and box-jitter noise is keyed by
// (config.seed, image, object), so it is identical across parameter sets.
// Throws DimMismatch.
PassDump run_toy_detector(const ToyDetectorParams& params, std::span<const SyntheticScene> scenes,
                          const SyntheticConfig& config, PassKind kind, const ToyPassOptions& options = {});

// T checkpoints, each with an original and `perturbations` perturbed target
// passes and a source proposal pass; ground truth for the target domain.
Run generate_trajectory(const SyntheticConfig& config);

// generate_trajectory + write_run into `dir`; also stores synthetic_config.json.
RunManifest write_synthetic_run(const SyntheticConfig& config, const std::filesystem::path& dir);

}  // namespace das
