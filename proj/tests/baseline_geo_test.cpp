/*
 * Copyright 2026 The MapDR Toolkit Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <random>

#include "doctest.h"
#include "mapdr/baseline_geo.hpp"
#include "mapdr/metrics.hpp"
#include "mapdr/synthgen.hpp"

namespace mapdr {
namespace {

using Partition = std::vector<std::vector<std::size_t>>;

SimilarityMatrix random_matrix(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<double> v(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) v[i * n + j] = v[j * n + i] = d(rng);
  }
  return SimilarityMatrix(n, std::move(v));
}

// Every block of `fine` sits inside one block of `coarse`.
bool refines(const Partition& fine, const Partition& coarse, std::size_t n) {
  std::vector<std::size_t> owner(n);
  for (std::size_t b = 0; b < coarse.size(); ++b) {
    for (std::size_t i : coarse[b]) owner[i] = b;
  }
  for (const auto& block : fine) {
    for (std::size_t i : block) {
      if (owner[i] != owner[block.front()]) return false;
    }
  }
  return true;
}

OcrObservation box(double y0, double y1, double z0, double z1, std::string text) {
  return {{{50, y0, z0}, {50, y0, z1}, {50, y1, z1}, {50, y1, z0}}, std::move(text)};
}

TEST_CASE("clustering examples") {
  CHECK(cluster_by_similarity(SimilarityMatrix::identity(4)) ==
        Partition{{0}, {1}, {2}, {3}});
  CHECK(cluster_by_similarity(SimilarityMatrix(3, std::vector<double>(9, 1.0))) ==
        Partition{{0, 1, 2}});
  const SimilarityMatrix m(3, {1, .8, .1, .8, 1, .1, .1, .1, 1});
  CHECK(cluster_by_similarity(m, 0.5) == Partition{{0, 1}, {2}});
  CHECK(cluster_by_similarity(m, 0.05) == Partition{{0, 1, 2}});
  CHECK(cluster_by_similarity(SimilarityMatrix::identity(0)).empty());
  // Chains close transitively and labels follow the smallest member.
  const SimilarityMatrix chain(4, {1, 0, 0, .9, 0, 1, .9, 0, 0, .9, 1, .9, .9, 0, .9, 1});
  CHECK(cluster_by_similarity(chain) == Partition{{0, 1, 2, 3}});
}

TEST_CASE("invalid matrices and thresholds") {
  CHECK_THROWS_AS(SimilarityMatrix(2, {1, .5, .4, 1}), InvariantViolation);
  CHECK_THROWS_AS(SimilarityMatrix(2, {1, 2, 2, 1}), InvariantViolation);
  CHECK_THROWS_AS(SimilarityMatrix(2, {0.9, 0, 0, 1}), InvariantViolation);
  CHECK_THROWS_AS(SimilarityMatrix(2, {1, 0, 0}), InvariantViolation);
  CHECK_THROWS_AS(cluster_by_similarity(SimilarityMatrix::identity(2), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(cluster_by_similarity(SimilarityMatrix::identity(2), -1.0),
                  std::invalid_argument);
}

TEST_CASE("clusters partition and refine monotonically") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 1 + rng() % 12;
    const auto m = random_matrix(n, rng);
    Partition prev;
    bool first = true;
    for (double t : {-0.9, -0.5, 0.0, 0.3, 0.5, 0.7, 0.95}) {
      const auto p = cluster_by_similarity(m, t);
      std::vector<int> seen(n, 0);
      for (const auto& block : p) {
        REQUIRE_FALSE(block.empty());
        for (std::size_t i : block) ++seen[i];
      }
      for (int s : seen) CHECK(s == 1);
      if (!first) CHECK(refines(p, prev, n));
      prev = p;
      first = false;
    }
  }
}

TEST_CASE("cosine similarity") {
  const auto m = cosine_similarity({{1, 0}, {2, 0}, {0, 3}, {-1, 0}, {0, 0}});
  CHECK(m(0, 1) == doctest::Approx(1.0));
  CHECK(m(0, 2) == doctest::Approx(0.0));
  CHECK(m(0, 3) == doctest::Approx(-1.0));
  CHECK(m(4, 4) == 1.0);
  CHECK(m(0, 4) == 0.0);
  CHECK(cluster_by_similarity(m) == Partition{{0, 1}, {2}, {3}, {4}});
  CHECK_THROWS_AS(cosine_similarity({{1, 0}, {1}}), std::invalid_argument);
}

TEST_CASE("grouping observations by overlap") {
  const std::vector<OcrObservation> obs = {
      box(0, 2, 5, 7, "arrow"), box(0.2, 2.1, 5.1, 6.9, "bus"),
      box(5, 7, 5, 7, "left"), box(5.5, 7.5, 5, 7, "only")};
  CHECK(group_observations(obs) == Partition{{0, 1}, {2, 3}});
  CHECK(group_observations(obs, 0.9) == Partition{{0}, {1}, {2}, {3}});
  const auto sim = overlap_similarity(obs);
  CHECK(sim(0, 2) == 0.0);
  CHECK(sim(2, 3) == doctest::Approx(1.5 / 2.5));
}

TEST_CASE("rule index parsing") {
  CHECK(parse_rule_index("1") == 1u);
  CHECK(parse_rule_index(" 12 ") == 12u);
  CHECK_FALSE(parse_rule_index("None").has_value());
  CHECK_FALSE(parse_rule_index("0").has_value());
  CHECK_FALSE(parse_rule_index("-2").has_value());
  CHECK_FALSE(parse_rule_index("1a").has_value());
  CHECK_FALSE(parse_rule_index("").has_value());
}

TEST_CASE("index-to-lane association") {
  SUBCASE("clean synthetic clips are predicted exactly") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto scene = generate_clip(random_scene(seed), seed);
      const auto pred = infer_correspondence(scene.rules, scene.clip);
      CHECK(pred == prediction_from_labels(scene.rules));
      const auto r = evaluate_clip(scene.rules, scene.graph, pred);
      CHECK(r.p_re == 1.0);
      CHECK(r.r_cr == 1.0);
      CHECK(r.p_all == 1.0);
      CHECK(r.ap == 1.0);
    }
  }
  SceneConfig cfg;
  cfg.lane_count = 3;
  cfg.rule_count = 1;
  const auto scene = generate_clip(cfg, 2);
  SUBCASE("unparsable index gives no edges") {
    Rule r = scene.rules[0].rule;
    r.rule_index = "None";
    const auto pred = infer_correspondence(std::vector<Rule>{r}, scene.clip);
    CHECK(pred.rules.size() == 1);
    CHECK(pred.rules[0].rule == r);
    CHECK(pred.edges.empty());
  }
  SUBCASE("out-of-range index gives no edges") {
    Rule r = scene.rules[0].rule;
    r.rule_index = "7";
    CHECK(infer_correspondence(std::vector<Rule>{r}, scene.clip).edges.empty());
  }
  SUBCASE("index picks the lane from the left") {
    Rule r = scene.rules[0].rule;
    r.rule_index = "3";
    const auto pred = infer_correspondence(std::vector<Rule>{r}, scene.clip);
    REQUIRE(pred.edges.size() == 1);
    CHECK(pred.edges[0].centerline == scene.lane_order[2]);
    CHECK(pred.edges[0].confidence == 1.0);
  }
  SUBCASE("no centerlines") {
    ClipData empty = scene.clip;
    std::erase_if(empty.vectors, [](const auto& kv) {
      return kv.second.type == VectorType::kCenterline;
    });
    CHECK_THROWS_AS(infer_correspondence(scene.rules, empty), InvariantViolation);
  }
}

}  // namespace
}  // namespace mapdr
