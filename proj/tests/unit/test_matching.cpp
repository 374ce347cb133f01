#include <algorithm>
#include <cmath>
#include <random>

#include "check_error.hpp"
#include "das/matching.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace das;
using fixture::det;

TEST_SUITE("matching") {

TEST_CASE("iou examples") {
  CHECK(iou({0, 0, 1, 1}, {0, 0, 1, 1}) == 1.0);
  CHECK(iou({0, 0, 1, 1}, {2, 2, 3, 3}) == 0.0);
  CHECK(iou({0, 0, 2, 2}, {1, 0, 3, 2}) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou({0, 0, 10, 10}, {0, 0, 10, 8}) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("kl examples") {
  const auto half = fixture::probs({0.5, 0.5});
  CHECK(kl_divergence(half, half) == 0.0);
  CHECK(kl_divergence(half, fixture::probs({0.25, 0.75})) == doctest::Approx(0.143841).epsilon(1e-6));
  CHECK(kl_divergence(half, fixture::probs({0.25, 0.75})) ==
        doctest::Approx(0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0)).epsilon(1e-14));
  CHECK(kl_divergence(fixture::probs({1.0, 0.0}), half) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  const std::vector<double> a{0.5, 0.5}, b{0.2, 0.3, 0.5};
  CHECK_DAS_ERROR(kl_divergence(a, b), ErrorCode::LengthMismatch);
}

TEST_CASE("kl agrees with the clamped oracle") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng() % 6;
    auto p = fixture::random_simplex(rng, k);
    auto q = fixture::random_simplex(rng, k);
    if (i % 5 == 0) {
      p[0] = 0.0;  // exercise the clamp
      double s = 0;
      for (double x : p) s += x;
      for (double& x : p) x /= s;
    }
    CHECK(kl_divergence(p, q) == doctest::Approx(oracle::kl(p, q)).epsilon(1e-12));
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}

TEST_CASE("pair_cost examples") {
  const auto a = det({0, 0, 10, 10}, {0.7, 0.3});
  CHECK(pair_cost(a, a) == -1.0);
  // KL((0.7,0.3) || (0.6,0.4)) evaluates to 0.0216008..., so the cost is -0.7783991...
  const double cost = pair_cost(a, det({0, 0, 10, 8}, {0.6, 0.4}));
  CHECK(cost == doctest::Approx(oracle::kl({0.7, 0.3}, {0.6, 0.4}) - 0.8).epsilon(1e-14));
  CHECK(cost == doctest::Approx(-0.7783991).epsilon(1e-7));
  CHECK(pair_cost(det({0, 0, 1, 1}, {0.5, 0.5}), det({5, 5, 6, 6}, {0.5, 0.5})) == 0.0);
}

TEST_CASE("pair_cost is bounded below by -1 and exact on identity") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 500; ++i) {
    const std::size_t k = 1 + rng() % 5;
    auto pa = fixture::random_simplex(rng, k);
    auto pb = fixture::random_simplex(rng, k);
    Detection a{fixture::random_box(rng), ProbabilityVector::from_values(pa)};
    Detection b{fixture::random_box(rng), ProbabilityVector::from_values(pb)};
    CHECK(pair_cost(a, b) >= -1.0);
    CHECK(pair_cost(a, a) == -1.0);
  }
}

TEST_CASE("hungarian examples") {
  CostMatrix m(2, 2);
  m << 1, 2, 3, 0;
  auto a = hungarian_assign(m);
  CHECK(a.total_cost == 1.0);
  REQUIRE(a.pairs.size() == 2);
  CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(a.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});

  CostMatrix one(1, 1);
  one << 5;
  CHECK(hungarian_assign(one).total_cost == 5.0);

  CostMatrix wide(2, 3);
  wide << 1, 9, 9, 9, 1, 9;
  a = hungarian_assign(wide);
  CHECK(a.total_cost == 2.0);
  CHECK(a.pairs[0] == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(a.pairs[1] == std::pair<std::size_t, std::size_t>{1, 1});

  CHECK_DAS_ERROR(hungarian_assign(CostMatrix(0, 3)), ErrorCode::EmptyMatrix);
}

TEST_CASE("hungarian equals brute force up to 6x6") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  std::uniform_int_distribution<int> small(0, 4);
  for (int i = 0; i < 400; ++i) {
    const auto r = 1 + static_cast<Eigen::Index>(rng() % 6);
    const auto c = 1 + static_cast<Eigen::Index>(rng() % 6);
    CostMatrix m(r, c);
    // Integer costs half the time so ties are frequent.
    for (Eigen::Index x = 0; x < r; ++x)
      for (Eigen::Index y = 0; y < c; ++y) m(x, y) = i % 2 ? u(rng) : small(rng);
    const auto a = hungarian_assign(m);
    const double expected = oracle::brute_force_assignment(m);
    if (i % 2) {
      CHECK(a.total_cost == doctest::Approx(expected).epsilon(1e-12));
    } else {
      CHECK(a.total_cost == expected);
    }
    // The pairs form an injection whose cost is the reported total.
    CHECK(a.pairs.size() == static_cast<std::size_t>(std::min(r, c)));
    std::vector<char> rows(r, 0), cols(c, 0);
    double sum = 0.0;
    for (auto [pr, pc] : a.pairs) {
      CHECK(!rows[pr]);
      CHECK(!cols[pc]);
      rows[pr] = cols[pc] = 1;
      sum += m(static_cast<Eigen::Index>(pr), static_cast<Eigen::Index>(pc));
    }
    CHECK(sum == doctest::Approx(a.total_cost).epsilon(1e-12));
    CHECK(std::is_sorted(a.pairs.begin(), a.pairs.end()));
    CHECK(hungarian_assign(CostMatrix(m.transpose())).total_cost == doctest::Approx(a.total_cost).epsilon(1e-12));
  }
}

TEST_CASE("image_flatness_cost examples") {
  const auto a = det({0, 0, 10, 10}, {0.9, 0.1});
  const auto b = det({20, 20, 30, 30}, {0.2, 0.8});
  const std::vector<Detection> one{a}, two{a, b}, none;
  CHECK(*image_flatness_cost(one, one) == -1.0);
  CHECK_FALSE(image_flatness_cost(none, one).has_value());
  CHECK_FALSE(image_flatness_cost(one, none).has_value());
  CHECK(*image_flatness_cost(two, one) == -1.0);
}

TEST_CASE("image_flatness_cost is unchanged by swapping sides when the matrix transposes") {
  // The cost matrix of the swapped call is the transpose only when each pair
  // shares probabilities (KL is asymmetric otherwise); IoU is symmetric.
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const auto p = fixture::random_simplex(rng, 3);
    std::vector<Detection> x, y;
    for (std::size_t n = 1 + rng() % 4; n > 0; --n) x.push_back({fixture::random_box(rng), ProbabilityVector::from_values(p)});
    for (std::size_t n = 1 + rng() % 4; n > 0; --n) y.push_back({fixture::random_box(rng), ProbabilityVector::from_values(p)});
    CHECK(*image_flatness_cost(x, y) == doctest::Approx(*image_flatness_cost(y, x)).epsilon(1e-12));
  }
}

TEST_CASE("build_cost_matrix rows are originals") {
  std::vector<Detection> orig{det({0, 0, 10, 10}, {0.7, 0.3})};
  std::vector<Detection> pert{det({0, 0, 10, 8}, {0.6, 0.4}), det({0, 0, 10, 10}, {0.7, 0.3})};
  const auto m = build_cost_matrix(orig, pert);
  REQUIRE(m.rows() == 1);
  REQUIRE(m.cols() == 2);
  CHECK(m(0, 0) == doctest::Approx(pair_cost(orig[0], pert[0])).epsilon(1e-15));
  CHECK(m(0, 1) == -1.0);
}

TEST_CASE("confidence filter keeps detections at the threshold") {
  std::vector<Detection> d{det({0, 0, 1, 1}, {0.5, 0.5}), det({0, 0, 1, 1}, {0.4, 0.3, 0.3}),
                           det({0, 0, 1, 1}, {0.9, 0.1})};
  CHECK(filter_by_confidence(d, 0.5).size() == 2);
  CHECK(filter_by_confidence(d, 0.0).size() == 3);
}

TEST_CASE("fis examples") {
  const auto a = det({0, 0, 10, 10}, {0.7, 0.3});
  const auto a_pert = det({0, 0, 10, 8}, {0.6, 0.4});
  auto orig = fixture::pass({fixture::image("img", {a})});
  auto pert = fixture::pass({fixture::image("img", {a_pert})}, Domain::target, PassKind::perturbed(0));
  const double expected = -(oracle::kl({0.7, 0.3}, {0.6, 0.4}) - 0.8);
  CHECK(fis(fixture::checkpoint(orig, {pert})) == doctest::Approx(expected).epsilon(1e-14));
  CHECK(fis(fixture::checkpoint(orig, {orig})) == 1.0);

  // Costs -1 and -0.5 average to FIS 0.75. A box with half the overlap and
  // identical probabilities costs exactly -0.5.
  const auto b = det({0, 0, 10, 10}, {0.8, 0.2});
  const auto b_half = det({0, 0, 10, 5}, {0.8, 0.2});
  auto o2 = fixture::pass({fixture::image("i1", {a}), fixture::image("i2", {b})});
  auto p2 = fixture::pass({fixture::image("i1", {a}), fixture::image("i2", {b_half})});
  CHECK(fis(fixture::checkpoint(o2, {p2})) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("fis averages perturbation passes and skips absent images") {
  const auto a = det({0, 0, 10, 10}, {0.8, 0.2});
  const auto half = det({0, 0, 10, 5}, {0.8, 0.2});
  const auto weak = det({0, 0, 10, 10}, {0.4, 0.3, 0.3});
  auto orig = fixture::pass({fixture::image("i1", {a}), fixture::image("i2", {a})});
  auto p1 = fixture::pass({fixture::image("i1", {a}), fixture::image("i2", {weak})});   // i2 absent
  auto p2 = fixture::pass({fixture::image("i1", {half}), fixture::image("i2", {half})});
  // (FIS pass 1 = 1, FIS pass 2 = 0.5) -> 0.75
  const auto b = flatness(fixture::checkpoint(orig, {p1, p2}));
  CHECK(b.fis == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(b.pass_images == std::vector<std::size_t>{1, 2});
}

TEST_CASE("fis error paths") {
  const auto a = det({0, 0, 10, 10}, {0.8, 0.2});
  const auto weak = det({0, 0, 10, 10}, {0.4, 0.3, 0.3});
  auto orig = fixture::pass({fixture::image("i1", {a})});
  CHECK_DAS_ERROR(fis(fixture::checkpoint(orig, {})), ErrorCode::MissingPass);
  auto other = fixture::pass({fixture::image("i9", {a})});
  CHECK_DAS_ERROR(fis(fixture::checkpoint(orig, {other})), ErrorCode::PassMismatch);
  auto empty = fixture::pass({fixture::image("i1", {weak})});
  CHECK_DAS_ERROR(fis(fixture::checkpoint(orig, {empty})), ErrorCode::NoContributingImages);
}

TEST_CASE("fis is invariant to image and detection order") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 50; ++t) {
    std::vector<ImageInference> o, p;
    for (int i = 0; i < 6; ++i) {
      std::vector<Detection> od, pd;
      for (std::size_t n = 1 + rng() % 4; n > 0; --n) {
        auto probs = fixture::random_simplex(rng, 3);
        probs[0] += 1.5;
        for (double& x : probs) x /= 2.5;
        od.push_back({fixture::random_box(rng), ProbabilityVector::from_values(probs)});
      }
      for (std::size_t n = 1 + rng() % 4; n > 0; --n) {
        auto probs = fixture::random_simplex(rng, 3);
        probs[1] += 1.5;
        for (double& x : probs) x /= 2.5;
        pd.push_back({fixture::random_box(rng), ProbabilityVector::from_values(probs)});
      }
      o.push_back(fixture::image("im" + std::to_string(i), od));
      p.push_back(fixture::image("im" + std::to_string(i), pd));
    }
    const double base = fis(fixture::checkpoint(fixture::pass(o), {fixture::pass(p)}));
    std::shuffle(o.begin(), o.end(), rng);
    std::shuffle(p.begin(), p.end(), rng);
    for (auto& im : o) std::shuffle(im.detections.begin(), im.detections.end(), rng);
    for (auto& im : p) std::shuffle(im.detections.begin(), im.detections.end(), rng);
    CHECK(fis(fixture::checkpoint(fixture::pass(o), {fixture::pass(p)})) == doctest::Approx(base).epsilon(1e-12));
  }
}

}  // TEST_SUITE
