#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "tigh/errors.hpp"
#include "tigh/postprocess.hpp"
#include "tigh/rng.hpp"

using namespace tigh;

TEST_SUITE_BEGIN("postprocess");

TEST_CASE("threshold top-k selection") {
  std::vector<double> p = {0.9, 0.5, 0.1, 0.05};
  CHECK(threshold_topk(p, 1, 0.4, TopkMode::union_mode) == std::vector<int>{0, 1});
  CHECK(threshold_topk(p, 1, 0.4, TopkMode::intersection_mode) == std::vector<int>{0});
  // θ = 1.0 empties the threshold set: plain Top-K
  CHECK(threshold_topk(p, 2, 1.0, TopkMode::union_mode) == std::vector<int>{0, 1});
  CHECK(threshold_topk(p, 0, 1.0, TopkMode::union_mode).empty());
  // θ = 0.0 in intersection mode admits every positive probability: plain Top-K
  CHECK(threshold_topk(p, 3, 0.0, TopkMode::intersection_mode) == std::vector<int>{0, 1, 2});

  // rank ties break toward the smaller species id
  std::vector<double> tie = {0.5, 0.7, 0.5, 0.5};
  CHECK(threshold_topk(tie, 2, 1.0, TopkMode::union_mode) == std::vector<int>{0, 1});
  CHECK(threshold_topk(tie, 3, 1.0, TopkMode::union_mode) == std::vector<int>{0, 1, 2});

  // K larger than the species count saturates
  CHECK(threshold_topk(p, 10, 1.0, TopkMode::union_mode) == std::vector<int>{0, 1, 2, 3});
  CHECK_THROWS_AS(threshold_topk(p, -1, 0.5, TopkMode::union_mode), InputError);

  // strict threshold: p_i == θ is not above it
  std::vector<double> exact = {0.4, 0.8};
  CHECK(threshold_topk(exact, 0, 0.4, TopkMode::union_mode) == std::vector<int>{1});
}

TEST_CASE("union and intersection bracket plain top-k") {
  Rng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<double> p(12);
    for (auto& v : p) v = rng.uniform();
    int k = static_cast<int>(rng.uniform_int(13));
    double theta = rng.uniform();
    auto plain = threshold_topk(p, k, 1.0, TopkMode::union_mode);
    auto uni = threshold_topk(p, k, theta, TopkMode::union_mode);
    auto inter = threshold_topk(p, k, theta, TopkMode::intersection_mode);
    CHECK(std::includes(uni.begin(), uni.end(), plain.begin(), plain.end()));
    CHECK(std::includes(plain.begin(), plain.end(), inter.begin(), inter.end()));
  }
}

TEST_CASE("samplewise f1") {
  CHECK(samplewise_f1({{1, 2, 3}}, {{1, 2, 3}}) == 1.0);
  CHECK(samplewise_f1({{1, 2}}, {{2, 3}}) == doctest::Approx(0.5));
  CHECK(samplewise_f1({{1, 2, 3}}, {{2, 3, 4, 5}}) == doctest::Approx(4.0 / 7.0));
  // mean over samples, including the both-empty convention
  CHECK(samplewise_f1({{1, 2}, {}}, {{2, 3}, {}}) == doctest::Approx(0.75));
  CHECK(samplewise_f1({{}}, {{1}}) == 0.0);
  CHECK(samplewise_f1({{1}}, {{}}) == 0.0);
  CHECK_THROWS_AS(samplewise_f1({{1}}, {{1}, {2}}), InputError);
  CHECK_THROWS_AS(samplewise_f1({}, {}), InputError);

  // invariant under a consistent relabeling
  CHECK(samplewise_f1({{10, 20}}, {{20, 30}}) == doctest::Approx(0.5));
}

TEST_CASE("grid search") {
  GridSpec spec;
  spec.k_min = 1;
  spec.k_max = 3;

  SUBCASE("all-zero probabilities fall back to the smallest-K sentinel") {
    std::vector<std::vector<double>> probs = {{0.0, 0.0, 0.0, 0.0}};
    std::vector<std::vector<int>> truth = {{}};
    GridResult r = grid_search(probs, truth, spec, TopkMode::union_mode);
    // every cell predicts a nonempty set against empty truth, so all tie at
    // zero and the first cell in enumeration order wins
    CHECK(r.best_k == 1);
    CHECK(r.best_theta == 1.0);
    CHECK(r.sentinel_theta == 1.0);
    CHECK(r.best_f1 == 0.0);
    CHECK(r.cells.size() == 3u * 42);  // 3 K values x (sentinel + 41 thetas)
    CHECK(r.cells.front().theta == 1.0);
    CHECK(r.cells[1].theta == doctest::Approx(0.10));
    CHECK(r.cells[41].theta == doctest::Approx(0.50));
  }

  SUBCASE("a uniquely best cell is found") {
    // species 1 sits below every grid theta, so only the rank cutoff can
    // recover it: K=2 is perfect and theta contributes nothing, leaving the
    // K=2 sentinel as the first cell attaining the maximum
    std::vector<std::vector<double>> probs = {{0.9, 0.09, 0.05, 0.0}};
    std::vector<std::vector<int>> truth = {{0, 1}};
    GridResult r = grid_search(probs, truth, spec, TopkMode::union_mode);
    CHECK(r.best_f1 == 1.0);
    CHECK(r.best_k == 2);
    CHECK(r.best_theta == 1.0);
  }

  SUBCASE("sentinel guarantee against plain top-k") {
    Rng rng(77);
    std::vector<std::vector<double>> probs(6, std::vector<double>(10));
    std::vector<std::vector<int>> truth(6);
    for (int s = 0; s < 6; ++s) {
      for (auto& v : probs[s]) v = rng.uniform();
      for (int j = 0; j < 10; ++j)
        if (rng.uniform() < 0.3) truth[s].push_back(j);
    }
    GridSpec wide;
    wide.k_min = 1;
    wide.k_max = 10;
    GridResult r = grid_search(probs, truth, wide, TopkMode::union_mode);
    for (int k = 1; k <= 10; ++k) {
      std::vector<std::vector<int>> plain;
      for (const auto& p : probs) plain.push_back(threshold_topk(p, k, 1.0, TopkMode::union_mode));
      CHECK(r.best_f1 >= samplewise_f1(plain, truth) - 1e-12);
    }
  }

  SUBCASE("threaded evaluation matches single-threaded") {
    Rng rng(5);
    std::vector<std::vector<double>> probs(4, std::vector<double>(8));
    std::vector<std::vector<int>> truth(4);
    for (int s = 0; s < 4; ++s) {
      for (auto& v : probs[s]) v = rng.uniform();
      truth[s].push_back(static_cast<int>(rng.uniform_int(8)));
    }
    GridResult a = grid_search(probs, truth, spec, TopkMode::intersection_mode, 1);
    GridResult b = grid_search(probs, truth, spec, TopkMode::intersection_mode, 4);
    REQUIRE(a.cells.size() == b.cells.size());
    CHECK(a.sentinel_theta == 0.0);
    for (std::size_t i = 0; i < a.cells.size(); ++i) CHECK(a.cells[i].f1 == b.cells[i].f1);
    CHECK(a.best_k == b.best_k);
    CHECK(a.best_theta == b.best_theta);
  }

  SUBCASE("empty ranges rejected") {
    GridSpec bad;
    bad.k_min = 5;
    bad.k_max = 4;
    CHECK_THROWS_AS(grid_search({{0.5}}, {{0}}, bad, TopkMode::union_mode), ConfigError);
    GridSpec badt;
    badt.theta_min = 0.5;
    badt.theta_max = 0.1;
    CHECK_THROWS_AS(grid_search({{0.5}}, {{0}}, badt, TopkMode::union_mode), ConfigError);
  }
}

TEST_CASE("output correction") {
  CHECK(correct_output({1, 2}, {}) == std::vector<int>{1, 2});
  CHECK(correct_output({1, 2}, {9}) == std::vector<int>{1, 2, 9});
  CHECK(correct_output({1, 2}, {2, 9}) == std::vector<int>{1, 2, 9});
  CHECK(correct_output({}, {1, 3}) == std::vector<int>{1, 3});
  // monotone: never removes anything
  auto merged = correct_output({4, 7}, {1, 7, 9});
  std::vector<int> kept = {4, 7};
  CHECK(std::includes(merged.begin(), merged.end(), kept.begin(), kept.end()));
  CHECK(merged == std::vector<int>{1, 4, 7, 9});
}

TEST_CASE("mode names round trip") {
  CHECK(topk_mode_from_string("union") == TopkMode::union_mode);
  CHECK(topk_mode_from_string("intersection") == TopkMode::intersection_mode);
  CHECK(topk_mode_to_string(TopkMode::union_mode) == "union");
  CHECK_THROWS_AS(topk_mode_from_string("bogus"), ConfigError);
}

TEST_SUITE_END();
