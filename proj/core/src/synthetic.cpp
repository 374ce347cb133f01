#include "das/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "das/error.hpp"
#include "das/random.hpp"
#include "json.hpp"

namespace das {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t domain_tag(Domain d) { return d == Domain::source ? 0 : 1; }

std::vector<double> linear_ramp(double start, double end, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    out[t] = n == 1 ? start : start + (end - start) * static_cast<double>(t) / static_cast<double>(n - 1);
  }
  return out;
}

Eigen::VectorXd gaussian_vector(KeyedStream& rng, std::size_t d) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = rng.normal();
  return v;
}

// K directions, orthonormal when K <= d (Gram-Schmidt), unit-norm otherwise.
Eigen::MatrixXd random_directions(std::uint64_t seed, std::string_view tag, std::size_t k, std::size_t d) {
  Eigen::MatrixXd dirs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(d));
  for (std::size_t r = 0; r < k; ++r) {
    KeyedStream rng(seed, tag, {r});
    Eigen::VectorXd v = gaussian_vector(rng, d);
    if (k <= d) {
      for (std::size_t q = 0; q < r; ++q) {
        const Eigen::VectorXd prev = dirs.row(static_cast<Eigen::Index>(q)).transpose();
        v -= prev.dot(v) * prev;
      }
    }
    dirs.row(static_cast<Eigen::Index>(r)) = v.normalized().transpose();
  }
  return dirs;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

SyntheticScene make_scene(const SyntheticConfig& c, const Eigen::MatrixXd& means, Domain domain, std::size_t i) {
  SyntheticScene scene;
  scene.domain = domain;
  scene.image_index = i;
  char id[32];
  std::snprintf(id, sizeof(id), "%s_%06zu", domain == Domain::source ? "src" : "tgt", i);
  scene.image_id = id;

  KeyedStream layout(c.seed, "scene", {domain_tag(domain), i});
  const auto n_objects = static_cast<std::size_t>(layout.uniform_int(
      static_cast<std::int64_t>(c.min_objects), static_cast<std::int64_t>(c.max_objects)));
  for (std::size_t o = 0; o < n_objects; ++o) {
    SceneObject obj;
    obj.class_id = static_cast<int>(layout.uniform_int(1, static_cast<std::int64_t>(c.num_classes)));
    const double w = std::min(layout.uniform(c.min_box, c.max_box), c.image_width - 1.0);
    const double h = std::min(layout.uniform(c.min_box, c.max_box), c.image_height - 1.0);
    const double x1 = layout.uniform(0.0, c.image_width - w);
    const double y1 = layout.uniform(0.0, c.image_height - h);
    obj.box = BoundingBox{x1, y1, x1 + w, y1 + h};

    KeyedStream noise(c.seed, "latent", {domain_tag(domain), i, o});
    obj.latent = means.row(obj.class_id - 1).transpose() + c.feature_noise * gaussian_vector(noise, c.feature_dim);
    scene.objects.push_back(std::move(obj));
  }
  for (std::size_t b = 0; b < c.background_proposals; ++b) {
    KeyedStream noise(c.seed, "background", {domain_tag(domain), i, b});
    scene.background.push_back(c.feature_noise * gaussian_vector(noise, c.feature_dim));
  }
  return scene;
}

}  // namespace

std::vector<double> ToyDetectorParams::flatten() const {
  std::vector<double> theta;
  theta.reserve(static_cast<std::size_t>(weights.size() + bias.size() + 1));
  for (Eigen::Index r = 0; r < weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < weights.cols(); ++c) theta.push_back(weights(r, c));
  }
  for (Eigen::Index r = 0; r < bias.size(); ++r) theta.push_back(bias(r));
  theta.push_back(box_gain);
  return theta;
}

ToyDetectorParams ToyDetectorParams::unflatten(std::span<const double> theta, std::size_t num_classes,
                                               std::size_t feature_dim, double sharpness) {
  const std::size_t rows = num_classes + 1;
  if (theta.size() != rows * feature_dim + rows + 1) {
    throw Error(ErrorCode::DimMismatch, "parameter vector has " + std::to_string(theta.size()) + " entries");
  }
  ToyDetectorParams p;
  p.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(feature_dim));
  std::size_t at = 0;
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.weights.cols(); ++c) p.weights(r, c) = theta[at++];
  }
  p.bias.resize(static_cast<Eigen::Index>(rows));
  for (Eigen::Index r = 0; r < p.bias.size(); ++r) p.bias(r) = theta[at++];
  p.box_gain = theta[at];
  p.sharpness = sharpness;
  return p;
}

std::vector<double> SyntheticConfig::drift() const {
  return drift_schedule.empty() ? linear_ramp(drift_start, drift_end, trajectory_length) : drift_schedule;
}

std::vector<double> SyntheticConfig::sharpness() const {
  return sharpness_schedule.empty() ? linear_ramp(sharpness_start, sharpness_end, trajectory_length)
                                    : sharpness_schedule;
}

void SyntheticConfig::check() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "synthetic config: " + what); };
  if (num_classes < 1) fail("num_classes must be >= 1");
  if (feature_dim < 1) fail("feature_dim must be >= 1");
  if (images_per_domain < 1) fail("images_per_domain must be >= 1");
  if (min_objects > max_objects) fail("min_objects > max_objects");
  if (!(class_separation > 0.0)) fail("class_separation must be > 0");
  if (!(domain_shift >= 0.0)) fail("domain_shift must be >= 0");
  if (!(feature_noise >= 0.0) || !(proposal_noise >= 0.0) || !(box_noise >= 0.0)) fail("noise levels must be >= 0");
  if (!(min_box > 0.0) || min_box > max_box) fail("box size range is invalid");
  if (!(image_width > min_box) || !(image_height > min_box)) fail("image must be larger than min_box");
  if (trajectory_length < 1) fail("trajectory_length must be >= 1");
  if (!drift_schedule.empty() && drift_schedule.size() != trajectory_length) fail("drift_schedule length != T");
  if (!sharpness_schedule.empty() && sharpness_schedule.size() != trajectory_length) {
    fail("sharpness_schedule length != T");
  }
  for (double k : sharpness()) {
    if (!(k > 0.0)) fail("sharpness must be > 0");
  }
  if (!(gamma >= 0.0)) fail("gamma must be >= 0");
  if (perturbations < 1) fail("perturbations must be >= 1");
}

SyntheticConfig synthetic_config_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("synthetic config: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidArgument, "synthetic config must be an object");
  SyntheticConfig c;
  try {
#define DAS_FIELD(name) \
  if (auto it = doc.find(#name); it != doc.end()) it->get_to(c.name)
    DAS_FIELD(num_classes);
    DAS_FIELD(feature_dim);
    DAS_FIELD(images_per_domain);
    DAS_FIELD(min_objects);
    DAS_FIELD(max_objects);
    DAS_FIELD(proposals_per_object);
    DAS_FIELD(background_proposals);
    DAS_FIELD(class_separation);
    DAS_FIELD(domain_shift);
    DAS_FIELD(feature_noise);
    DAS_FIELD(proposal_noise);
    DAS_FIELD(box_noise);
    DAS_FIELD(background_bias);
    DAS_FIELD(image_width);
    DAS_FIELD(image_height);
    DAS_FIELD(min_box);
    DAS_FIELD(max_box);
    DAS_FIELD(trajectory_length);
    DAS_FIELD(drift_start);
    DAS_FIELD(drift_end);
    DAS_FIELD(sharpness_start);
    DAS_FIELD(sharpness_end);
    DAS_FIELD(drift_schedule);
    DAS_FIELD(sharpness_schedule);
    DAS_FIELD(gamma);
    DAS_FIELD(perturbations);
    DAS_FIELD(iteration_step);
    DAS_FIELD(binary_features);
    DAS_FIELD(seed);
#undef DAS_FIELD
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("synthetic config: ") + e.what());
  }
  c.check();
  return c;
}

SyntheticConfig load_synthetic_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return synthetic_config_from_json(text.str());
}

std::string to_json(const SyntheticConfig& c) {
  ordered_json doc;
  doc["num_classes"] = c.num_classes;
  doc["feature_dim"] = c.feature_dim;
  doc["images_per_domain"] = c.images_per_domain;
  doc["min_objects"] = c.min_objects;
  doc["max_objects"] = c.max_objects;
  doc["proposals_per_object"] = c.proposals_per_object;
  doc["background_proposals"] = c.background_proposals;
  doc["class_separation"] = c.class_separation;
  doc["domain_shift"] = c.domain_shift;
  doc["feature_noise"] = c.feature_noise;
  doc["proposal_noise"] = c.proposal_noise;
  doc["box_noise"] = c.box_noise;
  doc["background_bias"] = c.background_bias;
  doc["image_width"] = c.image_width;
  doc["image_height"] = c.image_height;
  doc["min_box"] = c.min_box;
  doc["max_box"] = c.max_box;
  doc["trajectory_length"] = c.trajectory_length;
  doc["drift_start"] = c.drift_start;
  doc["drift_end"] = c.drift_end;
  doc["sharpness_start"] = c.sharpness_start;
  doc["sharpness_end"] = c.sharpness_end;
  doc["drift_schedule"] = c.drift_schedule;
  doc["sharpness_schedule"] = c.sharpness_schedule;
  doc["gamma"] = c.gamma;
  doc["perturbations"] = c.perturbations;
  doc["iteration_step"] = c.iteration_step;
  doc["binary_features"] = c.binary_features;
  doc["seed"] = c.seed;
  return doc.dump(2) + "\n";
}

std::vector<double> perturb_parameters(std::span<const double> theta, double gamma, std::uint64_t seed) {
  if (theta.empty()) throw Error(ErrorCode::EmptyParameters, "cannot perturb an empty parameter vector");
  if (!(gamma >= 0.0)) throw Error(ErrorCode::InvalidArgument, "gamma must be >= 0");
  std::vector<double> out(theta.begin(), theta.end());
  if (gamma == 0.0) return out;

  KeyedStream rng(seed, "perturb");
  std::vector<double> direction(theta.size());
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& v : direction) {
      v = rng.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  const double scale = gamma / std::sqrt(norm2);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += scale * direction[i];
  return out;
}

Scenario generate_scenario(const SyntheticConfig& config) {
  config.check();
  Scenario s;
  const double radius = config.class_separation / std::sqrt(2.0);
  s.source_means = radius * random_directions(config.seed, "class_means", config.num_classes, config.feature_dim);
  const Eigen::RowVectorXd shift =
      config.domain_shift * random_directions(config.seed, "shift_dir", 1, config.feature_dim).row(0);
  s.target_means = s.source_means.rowwise() + shift;

  s.source.reserve(config.images_per_domain);
  s.target.reserve(config.images_per_domain);
  for (std::size_t i = 0; i < config.images_per_domain; ++i) {
    s.source.push_back(make_scene(config, s.source_means, Domain::source, i));
    s.target.push_back(make_scene(config, s.target_means, Domain::target, i));
  }
  for (const auto& scene : s.target) {
    auto& objects = s.target_truth.images[scene.image_id];
    for (const auto& o : scene.objects) objects.push_back(GroundTruthObject{o.box, o.class_id});
  }
  return s;
}

ToyDetectorParams aligned_detector(const SyntheticConfig& config, const Scenario& scenario, double sharpness) {
  const auto k = static_cast<Eigen::Index>(config.num_classes);
  ToyDetectorParams p;
  p.weights = Eigen::MatrixXd::Zero(k + 1, static_cast<Eigen::Index>(config.feature_dim));
  for (Eigen::Index r = 0; r < k; ++r) p.weights.row(r) = scenario.source_means.row(r).normalized();
  p.bias = Eigen::VectorXd::Zero(k + 1);
  p.bias(k) = config.background_bias;
  p.box_gain = 1.0;
  p.sharpness = sharpness;
  return p;
}

Eigen::MatrixXd misaligned_weights(const SyntheticConfig& config) {
  const auto k = static_cast<Eigen::Index>(config.num_classes);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k + 1, static_cast<Eigen::Index>(config.feature_dim));
  for (Eigen::Index r = 0; r < k; ++r) {
    KeyedStream rng(config.seed, "misaligned", {static_cast<std::uint64_t>(r)});
    w.row(r) = gaussian_vector(rng, config.feature_dim).normalized().transpose();
  }
  return w;
}

ToyDetectorParams drifted_detector(const SyntheticConfig& config, const Scenario& scenario, double drift,
                                   double sharpness) {
  auto p = aligned_detector(config, scenario, sharpness);
  p.weights = (1.0 - drift) * p.weights + drift * misaligned_weights(config);
  return p;
}

PassDump run_toy_detector(const ToyDetectorParams& params, std::span<const SyntheticScene> scenes,
                          const SyntheticConfig& config, PassKind kind, const ToyPassOptions& options) {
  const auto k = config.num_classes;
  if (static_cast<std::size_t>(params.weights.rows()) != k + 1 ||
      static_cast<std::size_t>(params.weights.cols()) != config.feature_dim ||
      static_cast<std::size_t>(params.bias.size()) != k + 1) {
    throw Error(ErrorCode::DimMismatch, "toy detector parameters do not match K=" + std::to_string(k) +
                                            ", d=" + std::to_string(config.feature_dim));
  }
  PassDump pass;
  pass.domain = scenes.empty() ? Domain::target : scenes.front().domain;
  pass.kind = kind;

  auto head = [&](const Eigen::VectorXd& f) {
    return softmax(params.sharpness * (params.weights * f + params.bias));
  };
  auto proposal = [&](const Eigen::VectorXd& f) {
    const Eigen::VectorXd p = head(f);
    ProposalRecord rec;
    rec.feature.assign(f.data(), f.data() + f.size());
    rec.probs = ProbabilityVector::from_values(std::vector<double>(p.data(), p.data() + p.size()));
    return rec;
  };

  for (const auto& scene : scenes) {
    if (!scene.objects.empty() && static_cast<std::size_t>(scene.objects.front().latent.size()) != config.feature_dim) {
      throw Error(ErrorCode::DimMismatch, "scene latent dimension differs from d");
    }
    ImageInference image;
    image.image_id = scene.image_id;
    const auto dom = domain_tag(scene.domain);
    for (std::size_t o = 0; o < scene.objects.size(); ++o) {
      const auto& obj = scene.objects[o];
      if (options.detections) {
        KeyedStream jitter(config.seed, "box_jitter", {dom, scene.image_index, o});
        const double scale = params.box_gain * config.box_noise;
        BoundingBox box{obj.box.x1 + scale * jitter.normal(), obj.box.y1 + scale * jitter.normal(),
                        obj.box.x2 + scale * jitter.normal(), obj.box.y2 + scale * jitter.normal()};
        if (!box.valid()) box = obj.box;
        const Eigen::VectorXd p = head(obj.latent);
        const double fg = p.head(static_cast<Eigen::Index>(k)).sum();
        std::vector<double> probs(k);
        for (std::size_t c = 0; c < k; ++c) probs[c] = p(static_cast<Eigen::Index>(c)) / fg;
        image.detections.push_back(Detection{box, ProbabilityVector::from_values(std::move(probs))});
      }
      if (options.proposals) {
        for (std::size_t j = 0; j < config.proposals_per_object; ++j) {
          KeyedStream noise(config.seed, "proposal", {dom, scene.image_index, o, j});
          Eigen::VectorXd f = obj.latent + config.proposal_noise * gaussian_vector(noise, config.feature_dim);
          image.proposals.push_back(proposal(f));
        }
      }
    }
    if (options.proposals) {
      for (const auto& bg : scene.background) image.proposals.push_back(proposal(bg));
    }
    pass.images.push_back(std::move(image));
  }
  return pass;
}

Run generate_trajectory(const SyntheticConfig& config) {
  const auto scenario = generate_scenario(config);
  const auto drift = config.drift();
  const auto sharp = config.sharpness();

  Run run;
  auto& m = run.manifest;
  m.run_id = "synthetic-" + std::to_string(config.seed);
  m.dims = RunDims{config.num_classes, config.feature_dim};
  m.gamma = config.gamma;
  for (std::size_t c = 0; c < config.num_classes; ++c) m.class_names.push_back("class_" + std::to_string(c + 1));

  for (std::size_t t = 0; t < config.trajectory_length; ++t) {
    const auto params = drifted_detector(config, scenario, drift[t], sharp[t]);
    CheckpointRecord ckpt;
    char id[32];
    std::snprintf(id, sizeof(id), "ckpt_%03zu", t);
    ckpt.checkpoint_id = id;
    ckpt.index = static_cast<std::int64_t>((t + 1) * config.iteration_step);
    ckpt.target_original = run_toy_detector(params, scenario.target, config, PassKind::original());

    const auto theta = params.flatten();
    for (std::size_t r = 0; r < config.perturbations; ++r) {
      const auto moved = perturb_parameters(theta, config.gamma, derive_key(config.seed, "perturb", {t, r}));
      const auto neighbor = ToyDetectorParams::unflatten(moved, config.num_classes, config.feature_dim, sharp[t]);
      ckpt.target_perturbed.push_back(
          run_toy_detector(neighbor, scenario.target, config, PassKind::perturbed(r), {true, false}));
    }
    ckpt.source_proposals = run_toy_detector(params, scenario.source, config, PassKind::original(), {false, true});
    run.checkpoints.push_back(std::move(ckpt));
  }
  run.ground_truth = scenario.target_truth;
  return run;
}

RunManifest write_synthetic_run(const SyntheticConfig& config, const fs::path& dir) {
  const auto run = generate_trajectory(config);
  auto manifest = write_run(run, dir, RunWriteOptions{config.binary_features});
  std::ofstream out(dir / "synthetic_config.json", std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + (dir / "synthetic_config.json").string());
  out << to_json(config);
  return manifest;
}

}  // namespace das
