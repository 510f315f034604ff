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

#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "mapdr/metrics.hpp"
#include "mapdr/synthgen.hpp"
#include "oracles/oracles.hpp"

namespace mapdr {
namespace {

LabeledRule labeled(std::string key, Rule rule, std::vector<VectorId> lanes) {
  return {std::move(key), std::move(rule), std::move(lanes), {}};
}

Rule direction_rule(std::string index, LaneDirection d) {
  Rule r;
  r.rule_index = std::move(index);
  r.lane_direction = DirectionSet{d};
  return r;
}

CorrespondenceGraph graph_of(const std::vector<LabeledRule>& rules,
                             std::vector<VectorId> centerlines) {
  CorrespondenceGraph g;
  for (VectorId c : centerlines) g.add_centerline(c);
  for (const auto& r : rules) {
    g.add_rule(r.key);
    for (VectorId c : r.centerline_ids) g.add_edge(r.key, c);
  }
  return g;
}

// Rebuilds a prediction with rules and edges shuffled; positions follow.
PredictionSet shuffled(const PredictionSet& pred, std::mt19937_64& rng) {
  std::vector<std::size_t> perm(pred.rules.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  PredictionSet out;
  out.rules.resize(pred.rules.size());
  for (std::size_t i = 0; i < perm.size(); ++i) out.rules[perm[i]] = pred.rules[i];
  for (const auto& e : pred.edges) {
    out.edges.push_back({perm[e.rule_position], e.centerline, e.confidence});
  }
  std::shuffle(out.edges.begin(), out.edges.end(), rng);
  return out;
}

CorruptionSpec noisy_spec() {
  CorruptionSpec s;
  s.drop_rule_p = 0.2;
  s.perturb_property_p = 0.3;
  s.drop_edge_p = 0.2;
  s.add_edge_p = 0.4;
  return s;
}

TEST_CASE("safe ratios follow the empty-set convention") {
  CHECK(safe_precision(0, 0, 0) == 1.0);
  CHECK(safe_recall(0, 0, 0) == 1.0);
  CHECK(safe_precision(0, 0, 4) == 0.0);
  CHECK(safe_recall(0, 3, 0) == 0.0);
  CHECK(safe_precision(1, 4, 2) == 0.25);
  CHECK(safe_recall(1, 4, 2) == 0.5);
}

TEST_CASE("rule matching") {
  const auto fx = golden_fixture();
  SUBCASE("identical sets match completely") {
    const auto m = match_rules(fx.rules, prediction_from_labels(fx.rules));
    CHECK(m.pairs.size() == fx.rules.size());
    CHECK(m.unmatched_gt.empty());
    CHECK(m.unmatched_pred.empty());
    const auto pr = rule_extraction_pr(m);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("five truths, six predictions, three exact") {
    const auto m = match_rules(fx.rules, fx.prediction);
    CHECK(m.pairs.size() == 3);
    CHECK(m.unmatched_gt.size() == 2);
    CHECK(m.unmatched_pred.size() == 3);
    const auto pr = rule_extraction_pr(m);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == 0.6);
  }
  SUBCASE("one-to-one") {
    const Rule a = direction_rule("1", LaneDirection::kTurnLeft);
    const std::vector<LabeledRule> gt = {labeled("0", a, {})};
    const auto m = match_rules(gt, std::vector<PredictedRule>{{a, 0.9}, {a, 0.4}});
    REQUIRE(m.pairs.size() == 1);
    CHECK(m.pairs[0].first == "0");
    CHECK(m.pairs[0].second == 0);  // higher confidence wins the tie
    CHECK(m.unmatched_pred == std::vector<std::size_t>{1});
  }
  SUBCASE("whitespace noise does not block a match") {
    Rule a = direction_rule("1", LaneDirection::kTurnLeft);
    a.effective_time = "7:00 - 9:00";
    Rule b = a;
    b.effective_time = " 7:00  -  9:00\t";
    b.rule_index = " 1 ";
    const auto m = match_rules({labeled("0", a, {})}, std::vector<PredictedRule>{{b, 1.0}});
    CHECK(m.pairs.size() == 1);
  }
  SUBCASE("empty prediction") {
    const auto pr = rule_extraction_pr(match_rules(fx.rules, PredictionSet{}));
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
  }
  SUBCASE("both empty") {
    const auto pr = rule_extraction_pr(match_rules({}, PredictionSet{}));
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
}

TEST_CASE("correspondence precision and recall") {
  const auto fx = golden_fixture();
  SUBCASE("six truths, five predictions, three common") {
    const auto m = match_rules(fx.rules, fx.prediction);
    const auto edges = keyed_edges(fx.prediction, align_rules(fx.rules, fx.prediction, m));
    const auto pr = correspondence_pr(fx.graph, edges);
    CHECK(fx.graph.edge_count() == 6);
    CHECK(edges.size() == 5);
    CHECK(pr.precision == 0.6);
    CHECK(pr.recall == 0.5);
  }
  SUBCASE("predicted equals truth") {
    std::vector<KeyedEdge> edges;
    for (const auto& e : fx.graph.edges()) edges.push_back({e.rule_key, e.centerline});
    const auto pr = correspondence_pr(fx.graph, edges);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("no predicted edges") {
    const auto pr = correspondence_pr(fx.graph, {});
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
  }
  SUBCASE("unaligned rules still count as predictions") {
    const std::vector<KeyedEdge> edges = {{std::nullopt, 0}, {"0", 0}};
    const auto pr = correspondence_pr(fx.graph, edges);
    CHECK(pr.precision == 0.5);
    CHECK(pr.recall == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  }
  SUBCASE("unknown endpoints are rejected") {
    const std::vector<KeyedEdge> lane = {{"0", 42}};
    CHECK_THROWS_AS(correspondence_pr(fx.graph, lane), InvariantViolation);
    const std::vector<KeyedEdge> rule = {{"9", 0}};
    CHECK_THROWS_AS(correspondence_pr(fx.graph, rule), InvariantViolation);
  }
  SUBCASE("alignment falls back to the rule index") {
    const auto m = match_rules(fx.rules, fx.prediction);
    const auto align = align_rules(fx.rules, fx.prediction, m);
    std::size_t by_index = 0, unaligned = 0;
    for (std::size_t i = 0; i < align.size(); ++i) {
      if (!align[i]) {
        ++unaligned;
        CHECK(fx.prediction.rules[i].rule.rule_index == "6");
      } else if (!m.gt_key_of(i)) {
        ++by_index;
      }
    }
    CHECK(by_index == 2);
    CHECK(unaligned == 1);
  }
}

TEST_CASE("overall subgraph precision and recall") {
  const auto fx = golden_fixture();
  SUBCASE("golden fixture") {
    const auto pr = overall_pr(fx.rules, fx.graph, fx.prediction, 0.5);
    CHECK(pr.precision == 0.2);
    CHECK(pr.recall == 1.0 / 6.0);
  }
  SUBCASE("perfect prediction") {
    const auto pr = overall_pr(fx.rules, fx.graph, prediction_from_labels(fx.rules), 0.5);
    CHECK(pr.precision == 1.0);
    CHECK(pr.recall == 1.0);
  }
  SUBCASE("a single wrong property zeroes the subgraph") {
    const std::vector<LabeledRule> gt = {
        labeled("0", direction_rule("1", LaneDirection::kTurnLeft), {4})};
    const auto graph = graph_of(gt, {4});
    PredictionSet pred = prediction_from_labels(gt);
    pred.rules[0].rule.high_speed_limit = "60";
    const auto pr = overall_pr(gt, graph, pred, 0.0);
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
    const auto counts = count_clip(gt, graph, pred, threshold_grid(2));
    CHECK(counts.edge_hits == 1);
    CHECK(counts.subgraph_hits == 0);
  }
  SUBCASE("edges below the threshold are dropped") {
    PredictionSet pred = prediction_from_labels(fx.rules);
    for (auto& e : pred.edges) e.confidence = 0.3;
    const auto pr = overall_pr(fx.rules, fx.graph, pred, 0.5);
    CHECK(pr.precision == 0.0);
    CHECK(pr.recall == 0.0);
  }
}

TEST_CASE("golden fixture report") {
  const auto fx = golden_fixture();
  const auto r = evaluate_clip(fx.rules, fx.graph, fx.prediction);
  CHECK(r.p_re == 0.5);
  CHECK(r.r_re == 0.6);
  CHECK(r.p_cr == 0.6);
  CHECK(r.r_cr == 0.5);
  CHECK(r.p_all == 0.2);
  CHECK(r.r_all == 1.0 / 6.0);
  CHECK(r.counts.curve_hits.front() == 1);
  CHECK(r.curve.size() == kDefaultThresholdCount);
}

TEST_CASE("threshold grid") {
  const auto g = threshold_grid();
  REQUIRE(g.size() == 100);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1.0);
  CHECK(g[33] == 33.0 / 99.0);
  CHECK_THROWS_AS(threshold_grid(1), std::invalid_argument);
  CHECK(threshold_grid(2) == std::vector<double>{0.0, 1.0});
}

TEST_CASE("average precision") {
  const auto fx = golden_fixture();
  SUBCASE("perfect prediction at full confidence") {
    const auto ap = average_precision(fx.rules, fx.graph, prediction_from_labels(fx.rules));
    CHECK(ap.ap == 1.0);
    for (const auto& c : ap.curve) {
      CHECK(c.precision == 1.0);
      CHECK(c.recall == 1.0);
    }
  }
  SUBCASE("empty prediction") {
    CHECK(average_precision(fx.rules, fx.graph, PredictionSet{}).ap == 0.0);
  }
  SUBCASE("two edges worked by hand") {
    // Thresholds up to 0.4 keep both edges (p 1/2, r 1/2), up to 0.9 keep
    // the correct one (p 1, r 1/2), above that nothing (p 0, r 0). The
    // curve is (0, 0) -> (1/2, 1), area 1/4.
    const std::vector<LabeledRule> gt = {
        labeled("0", direction_rule("1", LaneDirection::kTurnLeft), {0}),
        labeled("1", direction_rule("2", LaneDirection::kGoStraight), {1})};
    const auto graph = graph_of(gt, {0, 1});
    PredictionSet pred = prediction_from_labels(gt);
    pred.edges = {{0, 0, 0.9}, {1, 0, 0.4}};
    const double oracle = oracle::brute_force_ap({{0.9, true}, {0.4, false}}, 2);
    CHECK(oracle == 0.25);
    const auto ap = average_precision(gt, graph, pred);
    CHECK(ap.ap == 0.25);
    CHECK(ap.curve[40].precision == 1.0);
    CHECK(ap.curve[39].precision == 0.5);
    CHECK(ap.curve[90].recall == 0.0);
  }
  SUBCASE("no ground truth and no prediction") {
    const auto ap = average_precision({}, CorrespondenceGraph{}, PredictionSet{});
    // Every point is (1, 1) by convention, so the prepended start is too.
    CHECK(ap.ap == 1.0);
  }
}

TEST_CASE("area under a hand curve") {
  const std::vector<CurvePoint> curve = {
      {0.0, 0.5, 1.0}, {0.5, 0.8, 0.5}, {0.7, 0.6, 0.5}, {1.0, 1.0, 0.25}};
  // Points (0, 1) prepended, (0.25, 1), (0.5, 0.8), (1, 0.5).
  CHECK(area_under_pr(curve) == doctest::Approx(0.25 + 0.225 + 0.325).epsilon(1e-15));
  CHECK(area_under_pr({}) == 0.0);
}

TEST_CASE("average precision agrees with the brute-force oracle") {
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    const auto scene = generate_clip(random_scene(seed), seed);
    CorruptionSpec spec = noisy_spec();
    spec.correct_low = 0.2;  // overlapping ranges exercise every curve shape
    spec.wrong_high = 0.1;
    std::mt19937_64 rng(seed);
    auto c = corrupt(scene.rules, scene.graph, spec, seed);
    // Re-draw confidences so correct and wrong edges interleave freely.
    std::vector<oracle::LabelledEdge> labelled;
    for (auto& e : c.edges) e.confidence = std::uniform_real_distribution<double>(0, 1)(rng);
    PredictionSet pred = c.prediction;
    pred.edges.clear();
    for (const auto& e : c.edges) {
      pred.edges.push_back({e.rule_position, e.centerline, e.confidence});
      labelled.push_back({e.confidence, e.subgraph_hit});
    }
    pred = canonicalize(std::move(pred));
    const auto ap = average_precision(scene.rules, scene.graph, pred);
    CHECK(ap.ap == doctest::Approx(oracle::brute_force_ap(labelled, scene.graph.edge_count()))
                       .epsilon(1e-12));
  }
}

TEST_CASE("counts obey their structural bounds") {
  const auto grid = threshold_grid();
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto scene = generate_clip(random_scene(seed), seed);
    const auto c = corrupt(scene.rules, scene.graph, noisy_spec(), seed);
    const auto counts = count_clip(scene.rules, scene.graph, c.prediction, grid);
    CHECK(counts.subgraph_hits <= counts.edge_hits);
    CHECK(counts.edge_hits <= std::min(counts.pred_edges, counts.gt_edges));
    CHECK(counts.rule_matches <= std::min(counts.pred_rules, counts.gt_rules));

    const auto m = match_rules(scene.rules, c.prediction);
    std::size_t matched_edges = 0;
    for (const auto& [key, pos] : m.pairs) {
      for (const auto& e : scene.graph.edges()) matched_edges += e.rule_key == key;
    }
    CHECK(counts.subgraph_hits <= matched_edges);

    for (std::size_t t = 1; t < grid.size(); ++t) {
      CHECK(counts.curve_pred[t] <= counts.curve_pred[t - 1]);
      CHECK(counts.curve_hits[t] <= counts.curve_hits[t - 1]);
    }
    CHECK(counts.curve_pred.front() == counts.pred_subgraphs);
  }
}

TEST_CASE("a rule on several lanes can out-score its single match") {
  const std::vector<LabeledRule> gt = {
      labeled("0", direction_rule("1", LaneDirection::kTurnLeft), {0, 1, 2})};
  const auto graph = graph_of(gt, {0, 1, 2});
  const auto counts =
      count_clip(gt, graph, prediction_from_labels(gt), threshold_grid(2));
  CHECK(counts.rule_matches == 1);
  CHECK(counts.subgraph_hits == 3);
}

TEST_CASE("metrics do not depend on prediction order") {
  const auto grid = threshold_grid();
  std::mt19937_64 rng(11);
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto scene = generate_clip(random_scene(seed), seed);
    auto c = corrupt(scene.rules, scene.graph, noisy_spec(), seed);
    // Duplicate a rule so ties inside the matching are exercised too.
    if (!c.prediction.rules.empty()) c.prediction.rules.push_back(c.prediction.rules[0]);
    const auto base = count_clip(scene.rules, scene.graph, c.prediction, grid);
    for (int rep = 0; rep < 5; ++rep) {
      CHECK(count_clip(scene.rules, scene.graph, shuffled(c.prediction, rng), grid) == base);
    }
  }
}

TEST_CASE("aggregation pools counts") {
  const auto grid = threshold_grid();
  const auto fx = golden_fixture();
  SUBCASE("single clip") {
    const auto r = evaluate_clip(fx.rules, fx.graph, fx.prediction);
    const auto agg = aggregate(std::span(&r, 1), grid);
    CHECK(agg.counts == r.counts);
    CHECK(agg.p_re == r.p_re);
    CHECK(agg.ap == r.ap);
    CHECK(agg.curve == r.curve);
  }
  SUBCASE("two half-right clips") {
    const std::vector<LabeledRule> gt = {
        labeled("0", direction_rule("1", LaneDirection::kTurnLeft), {0}),
        labeled("1", direction_rule("2", LaneDirection::kGoStraight), {1})};
    const auto graph = graph_of(gt, {0, 1});
    PredictionSet pred = prediction_from_labels(gt);
    pred.rules[1].rule.lane_type = LaneType::kBusLane;
    pred.edges = {{0, 0, 1.0}, {1, 0, 1.0}};
    const auto one = evaluate_clip(gt, graph, pred);
    CHECK(one.p_re == 0.5);
    CHECK(one.r_re == 0.5);
    const std::vector<MetricReport> both = {one, one};
    const auto agg = aggregate(both, grid);
    CHECK(agg.counts.rule_matches == 2);
    CHECK(agg.counts.gt_rules == 4);
    CHECK(agg.p_re == 0.5);
    CHECK(agg.r_re == 0.5);
    CHECK(agg.p_all == 0.5);
  }
  SUBCASE("mismatched grids are rejected") {
    const auto a = evaluate_clip(fx.rules, fx.graph, fx.prediction, 100);
    const auto b = evaluate_clip(fx.rules, fx.graph, fx.prediction, 10);
    const std::vector<MetricReport> both = {a, b};
    CHECK_THROWS_AS(aggregate(both, grid), std::invalid_argument);
    CHECK_THROWS_AS(aggregate({}, grid), std::invalid_argument);
  }
  SUBCASE("fifty synthetic clips match the counting oracle") {
    const auto spec = noisy_spec();
    const double tau = *separating_threshold(spec, grid);
    const auto tau_at = static_cast<std::size_t>(
        std::find(grid.begin(), grid.end(), tau) - grid.begin());
    ExpectedCounts want;
    std::vector<MetricReport> reports;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const auto scene = generate_clip(random_scene(seed), seed);
      const auto c = corrupt(scene.rules, scene.graph, spec, seed);
      reports.push_back(evaluate_clip(scene.rules, scene.graph, c.prediction));
      want.gt_rules += c.expected.gt_rules;
      want.pred_rules += c.expected.pred_rules;
      want.rule_matches += c.expected.rule_matches;
      want.gt_edges += c.expected.gt_edges;
      want.pred_edges += c.expected.pred_edges;
      want.edge_hits += c.expected.edge_hits;
      want.subgraph_hits += c.expected.subgraph_hits;
    }
    const auto agg = aggregate(reports, grid);
    CHECK(agg.counts.gt_rules == want.gt_rules);
    CHECK(agg.counts.pred_rules == want.pred_rules);
    CHECK(agg.counts.rule_matches == want.rule_matches);
    CHECK(agg.counts.gt_edges == want.gt_edges);
    CHECK(agg.counts.pred_edges == want.pred_edges);
    CHECK(agg.counts.edge_hits == want.edge_hits);
    CHECK(agg.counts.subgraph_hits == want.subgraph_hits);
    CHECK(agg.counts.curve_pred[tau_at] == want.edge_hits);
    CHECK(agg.counts.curve_hits[tau_at] == want.subgraph_hits);
    CHECK(agg.r_re == static_cast<double>(want.rule_matches) /
                          static_cast<double>(want.gt_rules));
  }
}

TEST_CASE("report json carries every headline number") {
  const auto fx = golden_fixture();
  const std::string j = report_to_json(evaluate_clip(fx.rules, fx.graph, fx.prediction));
  for (const char* key : {"\"p_re\": 0.5", "\"r_re\": 0.6", "\"p_cr\": 0.6",
                          "\"r_cr\": 0.5", "\"p_all\": 0.2", "\"ap\"", "\"curve\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
}

}  // namespace
}  // namespace mapdr
