#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "check_error.hpp"
#include "das/io.hpp"
#include "das/matching.hpp"
#include "das/prototypes.hpp"
#include "das/synthetic.hpp"
#include "das/validate.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace das;
namespace fs = std::filesystem;

namespace {

const RunDims kDims2{2, 3};

PassDump parse_text(const std::string& text, RunDims dims = kDims2, std::span<const float> sidecar = {}) {
  std::istringstream in(text);
  return parse_pass_dump(in, sidecar, dims, Domain::target, PassKind::original(), "mem");
}

SyntheticConfig small_config(std::size_t t = 3) {
  SyntheticConfig c;
  c.num_classes = 3;
  c.feature_dim = 4;
  c.images_per_domain = 12;
  c.trajectory_length = t;
  c.seed = 5;
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
}

bool has_message(const std::vector<Finding>& findings, const std::string& needle, Severity severity) {
  for (const auto& f : findings)
    if (f.severity == severity && f.message.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("core_model") {

TEST_CASE("probability vectors renormalize within tolerance and reject beyond it") {
  auto p = ProbabilityVector::from_values({0.5, 0.5});
  CHECK(p.size() == 2);
  auto q = ProbabilityVector::from_values({0.30004, 0.7});
  double s = 0.0;
  for (double v : q.values()) s += v;
  CHECK(std::abs(s - 1.0) <= 1e-9);
  CHECK_DAS_ERROR(ProbabilityVector::from_values({0.7, 0.4}), ErrorCode::ProbabilityViolation);
  CHECK_DAS_ERROR(ProbabilityVector::from_values({-0.1, 1.1}), ErrorCode::ProbabilityViolation);
  CHECK_DAS_ERROR(ProbabilityVector::from_values({NAN, 1.0}), ErrorCode::ProbabilityViolation);
  CHECK(ProbabilityVector::from_values({0.2, 0.5, 0.3}).argmax() == 1);
}

TEST_CASE("accepted probability vectors sum to one") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> jitter(-9e-5, 9e-5);
  for (int i = 0; i < 500; ++i) {
    auto v = fixture::random_simplex(rng, 1 + rng() % 10);
    v[0] = std::max(0.0, v[0] + jitter(rng));
    auto p = ProbabilityVector::from_values(v);
    double s = 0.0;
    for (double x : p.values()) s += x;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
}

TEST_CASE("boxes") {
  CHECK_DAS_ERROR(make_box(10, 10, 5, 20), ErrorCode::BoxViolation);
  CHECK_DAS_ERROR(make_box(0, 0, 0, 1), ErrorCode::BoxViolation);
  CHECK(make_box(0, 0, 2, 3).area() == 6.0);
}

TEST_CASE("pass dump record examples") {
  auto ok = parse_text(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"probs":[0.5,0.5]}],"proposals":[]})");
  REQUIRE(ok.images.size() == 1);
  CHECK(ok.images[0].detections[0].probs[0] == 0.5);
  CHECK_DAS_ERROR(parse_text(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"probs":[0.7,0.4]}]})"),
                  ErrorCode::ProbabilityViolation);
  CHECK_DAS_ERROR(parse_text(R"({"image_id":"a","detections":[{"bbox":[10,10,5,20],"probs":[0.5,0.5]}]})"),
                  ErrorCode::BoxViolation);
  CHECK_DAS_ERROR(parse_text(R"({"image_id":"a","proposals":[{"feature":[1,2],"probs":[0.2,0.3,0.5]}]})"),
                  ErrorCode::InconsistentDims);
  CHECK_DAS_ERROR(parse_text(R"({"image_id":"a","detections":[{"bbox":[0,0,1,1],"probs":[0.2,0.3,0.5]}]})"),
                  ErrorCode::InconsistentDims);
  CHECK_DAS_ERROR(parse_text("{\"image_id\":\"a\"}\n{\"image_id\":\"a\"}"), ErrorCode::MalformedRecord);
  CHECK_DAS_ERROR(parse_text("{not json"), ErrorCode::MalformedRecord);
  CHECK_DAS_ERROR(parse_text(R"({"detections":[]})"), ErrorCode::MalformedRecord);
}

TEST_CASE("parse errors carry the source line") {
  try {
    parse_text("{\"image_id\":\"a\"}\n{\"image_id\":\"b\",\"detections\":[{\"bbox\":[0,0,1],\"probs\":[1,0]}]}");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
  }
}

TEST_CASE("feature_ref reads from the sidecar") {
  const std::vector<float> sidecar{9, 9, 1.5f, 2.5f, 3.5f};
  auto pass = parse_text(R"({"image_id":"a","proposals":[{"feature_ref":{"offset":2,"count":3},"probs":[0.2,0.3,0.5]}]})",
                         kDims2, sidecar);
  CHECK(pass.images[0].proposals[0].feature == std::vector<double>{1.5, 2.5, 3.5});
  CHECK_DAS_ERROR(parse_text(R"({"image_id":"a","proposals":[{"feature_ref":{"offset":4,"count":3},"probs":[0.2,0.3,0.5]}]})",
                             kDims2, sidecar),
                  ErrorCode::MalformedRecord);
}

TEST_CASE("pass dump round trip") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 100.0);
  PassDump pass;
  for (int i = 0; i < 20; ++i) {
    ImageInference im;
    im.image_id = "img/" + std::to_string(i);
    for (std::size_t j = rng() % 4; j > 0; --j)
      im.detections.push_back({fixture::random_box(rng), ProbabilityVector::from_values(fixture::random_simplex(rng, 2))});
    for (std::size_t j = rng() % 4; j > 0; --j)
      im.proposals.push_back({{n(rng), n(rng), n(rng) * 1e-7}, ProbabilityVector::from_values(fixture::random_simplex(rng, 3))});
    pass.images.push_back(std::move(im));
  }
  std::ostringstream out;
  write_pass_dump(pass, out);
  const auto back = parse_text(out.str());
  REQUIRE(back.images.size() == pass.images.size());
  auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  for (std::size_t i = 0; i < pass.images.size(); ++i) {
    const auto& a = pass.images[i];
    const auto& b = back.images[i];
    CHECK(a.image_id == b.image_id);
    REQUIRE(a.detections.size() == b.detections.size());
    REQUIRE(a.proposals.size() == b.proposals.size());
    for (std::size_t j = 0; j < a.detections.size(); ++j) {
      CHECK(close(a.detections[j].bbox.x1, b.detections[j].bbox.x1));
      CHECK(close(a.detections[j].bbox.y2, b.detections[j].bbox.y2));
      for (std::size_t k = 0; k < 2; ++k) CHECK(close(a.detections[j].probs[k], b.detections[j].probs[k]));
    }
    for (std::size_t j = 0; j < a.proposals.size(); ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        CHECK(close(a.proposals[j].feature[k], b.proposals[j].feature[k]));
        CHECK(close(a.proposals[j].probs[k], b.proposals[j].probs[k]));
      }
  }
}

TEST_CASE("ground truth parsing") {
  std::istringstream ok(R"({"image_id":"a","objects":[{"bbox":[0,0,4,4],"class_id":2}]})");
  auto gt = parse_ground_truth(ok, kDims2);
  CHECK(gt.object_count() == 1);
  std::istringstream bad(R"({"image_id":"a","objects":[{"bbox":[0,0,4,4],"class_id":3}]})");
  CHECK_DAS_ERROR(parse_ground_truth(bad, kDims2), ErrorCode::InconsistentDims);
}

TEST_CASE("run round trip through disk, inline and binary features") {
  const auto run = generate_trajectory(small_config());
  for (bool binary : {false, true}) {
    fixture::TempDir dir("roundtrip");
    const auto manifest = write_run(run, dir.path(), {binary});
    const auto parsed = parse_manifest(dir.path() / "manifest.json");
    CHECK(parsed.checkpoints.size() == 3);
    CHECK(parsed.dims.num_classes == 3);
    CHECK(parsed.checkpoints[0].target_original->features.has_value() == binary);
    const auto loaded = load_run(parsed);
    REQUIRE(loaded.checkpoints.size() == run.checkpoints.size());
    REQUIRE(loaded.ground_truth.has_value());
    CHECK(loaded.ground_truth->object_count() == run.ground_truth->object_count());
    const auto& a = run.checkpoints[1].target_original.images[3];
    const auto& b = loaded.checkpoints[1].target_original.images[3];
    CHECK(a.image_id == b.image_id);
    REQUIRE(a.proposals.size() == b.proposals.size());
    const double tol = binary ? 1e-6 : 1e-12;
    for (std::size_t k = 0; k < a.proposals[0].feature.size(); ++k) {
      CHECK(b.proposals[0].feature[k] == doctest::Approx(a.proposals[0].feature[k]).epsilon(tol));
    }
    CHECK(validate_run(parsed).empty());
  }
}

TEST_CASE("manifest errors") {
  fixture::TempDir dir("manifest");
  const auto p = dir.path() / "manifest.json";
  auto names = [](int n) {
    std::string s = "[";
    for (int i = 0; i < n; ++i) s += (i ? ",\"c" : "\"c") + std::to_string(i) + "\"";
    return s + "]";
  };
  write_text(p, R"({"schema":"das-run/1","run_id":"r","K":8,"d":4,"class_names":)" + names(20) + R"(,"checkpoints":[]})");
  CHECK_DAS_ERROR(parse_manifest(p), ErrorCode::MalformedManifest);
  write_text(p, R"({"schema":"das-run/9","run_id":"r","K":1,"d":4,"class_names":["a"],"checkpoints":[]})");
  CHECK_DAS_ERROR(parse_manifest(p), ErrorCode::MalformedManifest);
  write_text(p, R"({"schema":"das-run/1","run_id":"r","K":1,"d":4,"gamma":0,"class_names":["a"],"checkpoints":[]})");
  CHECK_DAS_ERROR(parse_manifest(p), ErrorCode::MalformedManifest);
  write_text(p, R"({"run_id":"r","K":1,"d":4,"class_names":["a"],"checkpoints":[{"id":"c","index":1,"target_original":"nope.jsonl"}]})");
  CHECK_DAS_ERROR(parse_manifest(p), ErrorCode::MissingFile);
  write_text(p, "[1,2");
  CHECK_DAS_ERROR(parse_manifest(p), ErrorCode::MalformedManifest);
}

TEST_CASE("declared d disagrees with proposal features") {
  fixture::TempDir dir("dims");
  const auto run = generate_trajectory(small_config(1));
  write_run(run, dir.path());
  const auto path = dir.path() / "manifest.json";
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto pos = text.find("\"d\": 4");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 6, "\"d\": 8");
  write_text(path, text);
  CHECK_DAS_ERROR(load_run(path), ErrorCode::InconsistentDims);
  CHECK(has_fatal(validate_run(parse_manifest(path))));
}

TEST_CASE("validation findings") {
  const auto run = generate_trajectory(small_config(2));
  CHECK(validate_run(run).empty());

  auto missing = run;
  missing.checkpoints[1].target_perturbed.clear();
  auto f = validate_run(missing);
  CHECK(has_message(f, "missing perturbed pass", Severity::fatal));
  CHECK(f.front().checkpoint_id == run.checkpoints[1].checkpoint_id);

  auto mismatch = run;
  mismatch.checkpoints[0].target_perturbed[0].images.pop_back();
  CHECK(has_message(validate_run(mismatch), "pass image mismatch", Severity::fatal));

  auto no_source = run;
  no_source.checkpoints[0].source_proposals.reset();
  CHECK(has_message(validate_run(no_source), "missing source proposal pass", Severity::fatal));

  auto partial = run;
  partial.checkpoints[0].target_original.images[0].proposals.clear();
  f = validate_run(partial);
  CHECK(has_message(f, "without proposals", Severity::warning));
  CHECK_FALSE(has_fatal(f));

  auto silent = run;
  for (auto& im : silent.checkpoints[0].target_original.images) im.detections.clear();
  CHECK(has_message(validate_run(silent), "no contributing images", Severity::fatal));

  auto order = run;
  order.checkpoints[1].index = order.checkpoints[0].index;
  CHECK(has_message(validate_run(order), "does not increase", Severity::fatal));

  CHECK(describe({Severity::warning, "c", "m"}) == "warning [c]: m");
}

TEST_CASE("validation is clean exactly when scoring preconditions hold") {
  // Breaking any single precondition yields a fatal finding and the
  // corresponding scoring call throws; untouched runs score cleanly.
  const auto run = generate_trajectory(small_config(1));
  CHECK_FALSE(has_fatal(validate_run(run)));
  CHECK_NOTHROW(fis(run.checkpoints[0]));

  auto broken = run;
  for (auto& im : broken.checkpoints[0].source_proposals->images) im.proposals.clear();
  CHECK(has_fatal(validate_run(broken)));
  CHECK_DAS_ERROR(soft_prototypes(*broken.checkpoints[0].source_proposals, 3, 4), ErrorCode::ImageWithoutProposals);
}

}  // TEST_SUITE
