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

// Seeded synthetic scenes with analytically known metric outcomes.
//
// Scenes are straight roads along +x. Lanes are numbered left to right for a
// viewer travelling along +x (left is +y), rule i (RuleIndex "i") belongs to
// lane i, and vector ids are shuffled so that id order says nothing about the
// lateral layout. corrupt() records the expected metric counts while it
// corrupts, so the counts never depend on the metric engine.

#ifndef MAPDR_SYNTHGEN_HPP_
#define MAPDR_SYNTHGEN_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mapdr/core_model.hpp"
#include "mapdr/geometry.hpp"

namespace mapdr {

struct SceneConfig {
  int lane_count = 3;  // k, in [1, 8]
  int rule_count = 2;  // m, in [1, k]
  double lane_width = 3.5;
  double clip_length = 80.0;
  double frame_spacing = 2.0;
  double sign_distance = 50.0;  // ahead of the first frame
  std::array<double, kLaneTypeCount> lane_type_weights{1, 1, 1, 1, 1,
                                                       1, 1, 1, 1};
};

void validate(const SceneConfig& cfg);

/// Draws k in [1, 8] and m in [1, k] from `seed`; other fields default.
SceneConfig random_scene(std::uint64_t seed);

struct CorruptionSpec {
  double drop_rule_p = 0.0;
  double perturb_property_p = 0.0;
  double drop_edge_p = 0.0;
  double add_edge_p = 0.0;
  // Correct edges draw confidence from [correct_low, 1], wrong edges from
  // [0, wrong_high].
  double correct_low = 0.6;
  double wrong_high = 0.3;
};

void validate(const CorruptionSpec& spec);

/// Smallest grid threshold that keeps every correct edge and rejects every
/// wrong one, if the grid has one in (wrong_high, correct_low].
std::optional<double> separating_threshold(const CorruptionSpec& spec,
                                           std::span<const double> grid);

struct ExpectedCounts {
  std::size_t gt_rules = 0;
  std::size_t pred_rules = 0;
  std::size_t rule_matches = 0;
  std::size_t gt_edges = 0;
  std::size_t pred_edges = 0;
  std::size_t edge_hits = 0;
  std::size_t subgraph_hits = 0;

  friend bool operator==(const ExpectedCounts&,
                         const ExpectedCounts&) = default;
};

/// Ground truth of one emitted edge as decided during corruption.
struct EdgeTruth {
  std::size_t rule_position = 0;
  VectorId centerline = 0;
  double confidence = 0.0;
  bool edge_hit = false;      // links the right rule to the right lane
  bool subgraph_hit = false;  // ...and the rule itself is exactly right
};

struct GeneratedScene {
  ClipData clip;
  std::vector<LabeledRule> rules;
  CorrespondenceGraph graph;
  std::vector<VectorId> lane_order;  // centerline ids, left to right
};

struct Corruption {
  PredictionSet prediction;
  ExpectedCounts expected;
  std::vector<EdgeTruth> edges;
};

GeneratedScene generate_clip(const SceneConfig& cfg, std::uint64_t seed);

Corruption corrupt(const std::vector<LabeledRule>& rules,
                   const CorrespondenceGraph& graph, const CorruptionSpec& spec,
                   std::uint64_t seed);

/// Replaces exactly one enumerated property (lane type, lane direction,
/// allowed transport or effective date) with a different valid value.
Rule perturb_one_property(const Rule& rule, std::mt19937_64& rng);

/// The worked metric example: 5 ground-truth rules over 8 centerlines with 6
/// edges, and a prediction of 6 rules (3 exact) and 5 edges (3 on the right
/// lane, 1 of those on an exactly right rule). Confidences are 1.
struct MetricFixture {
  ClipData clip;
  std::vector<LabeledRule> rules;
  CorrespondenceGraph graph;
  PredictionSet prediction;
};

MetricFixture golden_fixture();

/// Camera-to-world rotation of a camera looking along +x with image x to the
/// right (-y) and image y down (-z).
Mat3 forward_camera_rotation();

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::string clip_id;
  std::uint64_t seed = 0;
  SceneConfig scene;
  std::optional<CorruptionSpec> corruption;
  std::optional<ExpectedCounts> expected;
};

std::string write_manifest(const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> parse_manifest(std::string_view bytes);

}  // namespace mapdr

#endif  // MAPDR_SYNTHGEN_HPP_
