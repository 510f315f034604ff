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
#include "mapdr/core_model.hpp"
#include "oracles/oracles.hpp"

namespace mapdr {
namespace {

Rule sample_rule(std::string index, DirectionSet dirs) {
  Rule r;
  r.lane_type = LaneType::kDirectionLane;
  r.rule_index = std::move(index);
  r.lane_direction = dirs;
  return r;
}

TEST_CASE("normalize_rule trims and collapses text properties") {
  Rule a;
  a.effective_time = " 7:00 - 9:00 ";
  Rule b;
  b.effective_time = "7:00 - 9:00";
  CHECK(normalize_rule(a).effective_time == "7:00 - 9:00");
  CHECK(normalize_rule(a) == normalize_rule(b));

  Rule c;
  c.high_speed_limit = "\t1 2 0\n";
  c.rule_index = "  3 ";
  c.low_speed_limit = "a   b";
  const Rule n = normalize_rule(c);
  CHECK(n.high_speed_limit == "1 2 0");
  CHECK(n.rule_index == "3");
  CHECK(n.low_speed_limit == "a b");
  CHECK(n.lane_type == c.lane_type);
}

TEST_CASE("lane direction has set semantics") {
  const DirectionSet a{LaneDirection::kGoStraight, LaneDirection::kTurnLeft};
  const DirectionSet b{LaneDirection::kTurnLeft, LaneDirection::kGoStraight};
  CHECK(a == b);
  Rule ra, rb;
  ra.lane_direction = a;
  rb.lane_direction = b;
  CHECK(normalize_rule(ra) == normalize_rule(rb));
  CHECK(a.size() == 2);
  CHECK(a.members() ==
        std::vector<LaneDirection>{LaneDirection::kGoStraight,
                                   LaneDirection::kTurnLeft});
}

TEST_CASE("normalize_rule is idempotent on random rules") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const Rule r = oracle::random_rule(rng, true);
    const Rule once = normalize_rule(r);
    CHECK(normalize_rule(once) == once);
  }
}

TEST_CASE("rules_equal examples") {
  Rule a = sample_rule("1", {LaneDirection::kGoStraight});
  CHECK(rules_equal(a, a));

  Rule b = a;
  a.high_speed_limit = "120";
  b.high_speed_limit = "100";
  CHECK_FALSE(rules_equal(a, b));

  const Rule entry0 = sample_rule(
      "1", {LaneDirection::kGoStraight, LaneDirection::kTurnLeft});
  const Rule entry1 = sample_rule("2", {LaneDirection::kGoStraight});
  CHECK_FALSE(rules_equal(entry0, entry1));

  Rule spaced = entry0;
  spaced.rule_index = " 1 ";
  CHECK(rules_equal(entry0, spaced));

  Rule cased = entry0;
  cased.effective_time = "none";
  CHECK_FALSE(rules_equal(entry0, cased));
}

TEST_CASE("rules_equal is an equivalence relation") {
  std::mt19937_64 rng(11);
  std::vector<Rule> pool;
  // Small vocabulary so that equal pairs actually occur.
  for (int i = 0; i < 150; ++i) {
    Rule r = oracle::random_rule(rng, true);
    r.lane_type = static_cast<LaneType>(i % 2);
    r.allowed_transport = Transport::kNone;
    r.effective_date = EffectiveDate::kNone;
    r.lane_direction = DirectionSet{LaneDirection::kNone};
    r.effective_time = (i % 3 == 0) ? " None" : "None ";
    r.low_speed_limit = "None";
    r.high_speed_limit = (i % 5 == 0) ? "60" : " 60";
    pool.push_back(r);
  }
  std::size_t equal_pairs = 0;
  for (const auto& a : pool) {
    CHECK(rules_equal(a, a));
    for (const auto& b : pool) {
      const bool ab = rules_equal(a, b);
      CHECK(ab == rules_equal(b, a));
      if (!ab) continue;
      ++equal_pairs;
      for (const auto& c : pool) {
        if (rules_equal(b, c)) CHECK(rules_equal(a, c));
      }
    }
  }
  CHECK(equal_pairs > pool.size());
}

TEST_CASE("rule validation") {
  Rule r;
  CHECK_NOTHROW(validate(r));
  r.lane_direction = DirectionSet{};
  CHECK_THROWS_AS(validate(r), InvariantViolation);
  r.lane_direction = DirectionSet{LaneDirection::kNone, LaneDirection::kTurnLeft};
  CHECK_THROWS_AS(validate(r), InvariantViolation);
}

TEST_CASE("vocabulary strings round-trip") {
  for (int i = 0; i < kLaneTypeCount; ++i) {
    const auto v = static_cast<LaneType>(i);
    CHECK(parse_lane_type(to_string(v)) == v);
  }
  for (int i = 0; i < kLaneDirectionCount; ++i) {
    const auto v = static_cast<LaneDirection>(i);
    CHECK(parse_lane_direction(to_string(v)) == v);
  }
  for (int i = 0; i < kTransportCount; ++i) {
    const auto v = static_cast<Transport>(i);
    CHECK(parse_transport(to_string(v)) == v);
  }
  CHECK(parse_lane_type("Non-MotorizedLane") == LaneType::kNonMotorizedLane);
  CHECK(parse_transport("Non-Motor") == Transport::kNonMotor);
  CHECK_FALSE(parse_lane_type("directionlane").has_value());
  CHECK_FALSE(parse_effective_date("Weekends").has_value());
}

TEST_CASE("rule keys order numerically") {
  RuleKeyLess less;
  CHECK(less("2", "10"));
  CHECK_FALSE(less("10", "2"));
  CHECK(less("9", "a"));
  CHECK(less("007", "8"));
  CHECK(less("a", "b"));
}

TEST_CASE("correspondence graph only links known rules to centerlines") {
  CorrespondenceGraph g;
  g.add_rule("0");
  g.add_centerline(17);
  CHECK_NOTHROW(g.add_edge("0", 17));
  CHECK_THROWS_AS(g.add_edge("1", 17), InvariantViolation);
  CHECK_THROWS_AS(g.add_edge("0", 16), InvariantViolation);
  CHECK(g.edge_count() == 1);

  ClipData clip;
  clip.vectors[3] = LaneVector{3, VectorType::kDivider, {{0, 0, 0}, {1, 0, 0}}};
  LabeledRule r;
  r.key = "0";
  r.centerline_ids = {3};
  CHECK_THROWS_AS(build_graph({r}, clip), InvariantViolation);
}

TEST_CASE("clip validation") {
  ClipData clip;
  clip.poses["1"] = CameraPose{"1", {}, {0, 0, 0, 1}};
  CHECK_NOTHROW(validate(clip));

  ClipData no_pose = clip;
  no_pose.poses.clear();
  CHECK_THROWS_AS(validate(no_pose), InvariantViolation);

  ClipData short_vec = clip;
  short_vec.vectors[0] = LaneVector{0, VectorType::kCenterline, {{0, 0, 0}}};
  CHECK_THROWS_AS(validate(short_vec), InvariantViolation);

  ClipData bad_quat = clip;
  bad_quat.poses["1"].rotation = {0, 0, 0, 1.01};
  CHECK_THROWS_AS(validate(bad_quat), InvariantViolation);

  ClipData bad_k = clip;
  bad_k.intrinsics.fx = 0.0;
  CHECK_THROWS_AS(validate(bad_k), InvariantViolation);
}

TEST_CASE("polygon degeneracy") {
  CHECK(polygon_non_degenerate({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}));
  CHECK_FALSE(polygon_non_degenerate({{0, 0, 0}, {1, 0, 0}, {1, 0, 0}}));
  OcrObservation obs{{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}, {1, 1, 0}}, "x"};
  CHECK_THROWS_AS(validate(obs), InvariantViolation);
}

TEST_CASE("prediction validation") {
  PredictionSet p;
  p.rules.push_back({Rule{}, 0.5});
  p.edges.push_back({0, 4, 0.9});
  CHECK_NOTHROW(validate(p, nullptr));
  p.edges.push_back({0, 4, 0.2});
  CHECK_THROWS_AS(validate(p, nullptr), InvariantViolation);
  p.edges.pop_back();
  p.edges.push_back({1, 4, 0.2});
  CHECK_THROWS_AS(validate(p, nullptr), InvariantViolation);
  p.edges.pop_back();
  p.rules[0].confidence = 1.5;
  CHECK_THROWS_AS(validate(p, nullptr), InvariantViolation);
}

}  // namespace
}  // namespace mapdr
