#include <cstdlib>

#include "check_error.hpp"
#include "das/engine.hpp"
#include "das/io.hpp"
#include "das/parallel.hpp"
#include "das/synthetic.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "json.hpp"

using namespace das;

namespace {

Run small_run(std::size_t t = 4, std::uint64_t seed = 2) {
  SyntheticConfig c;
  c.images_per_domain = 30;
  c.trajectory_length = t;
  c.seed = seed;
  return generate_trajectory(c);
}

}  // namespace

TEST_SUITE("engine") {

TEST_CASE("score report carries one row per checkpoint and one selection") {
  const auto run = small_run();
  const auto rep = score_run(run, {});
  REQUIRE(rep.checkpoints.size() == 4);
  REQUIRE(rep.selected_checkpoint_id.has_value());
  CHECK(rep.checkpoints[*rep.selected_position].checkpoint_id == *rep.selected_checkpoint_id);
  for (const auto& r : rep.checkpoints) {
    CHECK(r.fis.has_value());
    CHECK(*r.das == doctest::Approx(*r.fis_normalized + *r.pdr_normalized).epsilon(1e-15));
    CHECK_FALSE(r.baselines.has_value());
    CHECK_FALSE(r.map.has_value());
  }
  CHECK_FALSE(rep.evaluation.has_value());
}

TEST_CASE("lambda zero makes DAS the normalized FIS") {
  ScoreOptions o;
  o.lambda = 0.0;
  for (const auto& r : score_run(small_run(), o).checkpoints) CHECK(*r.das == *r.fis_normalized);
}

TEST_CASE("scores do not depend on the worker count or lazy loading") {
  const auto run = small_run(5, 9);
  ScoreOptions one, many;
  one.baselines = many.baselines = true;
  many.workers = 4;
  const auto a = to_json(score_run(run, one, &*run.ground_truth));
  CHECK(a == to_json(score_run(run, many, &*run.ground_truth)));
  fixture::TempDir dir("engine");
  const auto manifest = write_run(run, dir.path());
  CHECK(a == to_json(score_manifest(manifest, many, &*run.ground_truth)));
}

TEST_CASE("single checkpoint run notes degenerate normalization") {
  ScoreOptions o;
  o.baselines = true;
  const auto rep = score_run(small_run(1), o);
  CHECK(*rep.checkpoints[0].das == 1.0);
  REQUIRE_FALSE(rep.notes.empty());
  CHECK(rep.notes[0].find("degenerate normalization") != std::string::npos);
}

TEST_CASE("baselines without proposals omit FD with a warning") {
  auto run = small_run(2);
  for (auto& c : run.checkpoints) {
    for (auto& im : c.target_original.images) im.proposals.clear();
    c.source_proposals.reset();
  }
  ScoreOptions o;
  o.flatness_and_prototypes = false;
  o.baselines = true;
  o.atc_thresholds = {0.3, 0.95};
  const auto rep = score_run(run, o);
  CHECK(rep.checkpoints[0].baselines->atc.size() == 2);
  CHECK_FALSE(rep.checkpoints[0].baselines->fd.has_value());
  bool warned = false;
  for (const auto& n : rep.notes) warned |= n.find("FD column omitted") != std::string::npos;
  CHECK(warned);
  const auto table = to_table(rep);
  CHECK(table.find("ATC@0.3") != std::string::npos);
  CHECK(table.find("ATC@0.95") != std::string::npos);
  CHECK(table.substr(0, table.find("note:")).find("FD") == std::string::npos);
}

TEST_CASE("report document schema and rounding") {
  const auto run = small_run(3);
  ScoreOptions o;
  o.baselines = true;
  const auto rep = score_run(run, o, &*run.ground_truth);
  const auto doc = nlohmann::json::parse(to_json(rep));
  CHECK(doc["schema"] == "das-report/1");
  CHECK(doc["checkpoints"].size() == 3);
  CHECK(doc["selected_checkpoint"] == *rep.selected_checkpoint_id);
  const double fis = doc["checkpoints"][0]["fis"].get<double>();
  CHECK(format_sig6(fis) == format_sig6(*rep.checkpoints[0].fis));
  CHECK(doc["evaluation"]["comparison"]["improvement"].is_string());
  CHECK(doc["evaluation"]["correlation"].is_array());
  CHECK(doc["checkpoints"][0]["baselines"]["atc"].contains("0.95"));
  const auto table = to_table(rep);
  CHECK(table.find("* " + *rep.selected_checkpoint_id) != std::string::npos);
  CHECK(table.find("Oracle") != std::string::npos);
}

TEST_CASE("scoring errors surface as das errors") {
  auto run = small_run(2);
  run.checkpoints[1].target_perturbed.clear();
  CHECK_DAS_ERROR(score_run(run, {}), ErrorCode::MissingPass);
}

TEST_CASE("parallel_for covers every index and rethrows") {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 3, [&](std::size_t i) { hit[i] += 1; });
  CHECK(std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 2, [](std::size_t i) {
                    if (i == 7) throw Error(ErrorCode::InvalidArgument, "boom");
                  }),
                  Error);
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("worker count from the environment") {
  setenv("DAS_THREADS", "3", 1);
  CHECK(worker_count_from_env() == 3);
  setenv("DAS_THREADS", "0", 1);
  CHECK(worker_count_from_env() >= 1);
  unsetenv("DAS_THREADS");
  CHECK(worker_count_from_env() >= 1);
}

}  // TEST_SUITE
