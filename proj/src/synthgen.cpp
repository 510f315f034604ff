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

#include "mapdr/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace mapdr {
namespace {

constexpr std::uint64_t kBaseTimestampNs = 1710907374739989000ULL;
constexpr std::uint64_t kFramePeriodNs = 100'000'000ULL;
constexpr double kCameraHeight = 1.5;
constexpr double kSignBottom = 5.0;
constexpr double kSignTop = 7.0;
constexpr double kPointSpacing = 10.0;

bool bernoulli(std::mt19937_64& rng, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(rng);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (!(hi > lo)) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

template <typename T>
T pick(std::mt19937_64& rng, const std::vector<T>& values) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return values[d(rng)];
}

// All valid lane-direction sets: {None} plus every non-empty subset of the
// five real directions.
std::vector<DirectionSet> valid_direction_sets() {
  std::vector<DirectionSet> out{DirectionSet{LaneDirection::kNone}};
  for (unsigned mask = 1; mask < (1u << 5); ++mask) {
    out.push_back(DirectionSet::from_bits(static_cast<std::uint8_t>(mask << 1)));
  }
  return out;
}

Rule random_rule(const SceneConfig& cfg, std::mt19937_64& rng,
                 std::string rule_index) {
  Rule r;
  std::discrete_distribution<int> type_dist(cfg.lane_type_weights.begin(),
                                            cfg.lane_type_weights.end());
  r.lane_type = static_cast<LaneType>(type_dist(rng));
  r.rule_index = std::move(rule_index);

  const bool directional = r.lane_type == LaneType::kDirectionLane ||
                           r.lane_type == LaneType::kVariableDirectionLane ||
                           r.lane_type == LaneType::kTidalFlowLane;
  if (directional || bernoulli(rng, 0.2)) {
    DirectionSet set;
    while (set.empty()) {
      for (auto d : {LaneDirection::kGoStraight, LaneDirection::kTurnLeft,
                     LaneDirection::kTurnRight, LaneDirection::kTurnAround}) {
        if (bernoulli(rng, 0.4)) set.insert(d);
      }
    }
    r.lane_direction = set;
  } else {
    r.lane_direction = DirectionSet{LaneDirection::kNone};
  }

  switch (r.lane_type) {
    case LaneType::kBusLane:
      r.allowed_transport = Transport::kBus;
      break;
    case LaneType::kNonMotorizedLane:
      r.allowed_transport = Transport::kNonMotor;
      break;
    default:
      r.allowed_transport = bernoulli(rng, 0.7)
                                ? Transport::kNone
                                : pick(rng, std::vector<Transport>{
                                                Transport::kVehicle,
                                                Transport::kTruck,
                                                Transport::kBus});
  }

  r.effective_date =
      bernoulli(rng, 0.3) ? EffectiveDate::kWorkDays : EffectiveDate::kNone;
  if (r.effective_date == EffectiveDate::kWorkDays) {
    r.effective_time = pick(rng, std::vector<std::string>{
                                     "7:00-9:00", "17:00-19:00",
                                     "7:00-9:00 17:00-19:00"});
  }
  if (r.lane_type == LaneType::kSpeedLimitedLane) {
    r.low_speed_limit = pick(rng, std::vector<std::string>{"None", "40", "60"});
    r.high_speed_limit = pick(rng, std::vector<std::string>{"80", "100", "120"});
  }
  return r;
}

std::vector<Point3> line_points(double y, double length, double z) {
  const auto segments =
      std::max<std::size_t>(1, static_cast<std::size_t>(length / kPointSpacing));
  std::vector<Point3> pts;
  for (std::size_t i = 0; i <= segments; ++i) {
    pts.push_back({length * static_cast<double>(i) / static_cast<double>(segments),
                   y, z});
  }
  return pts;
}

}  // namespace

void validate(const SceneConfig& cfg) {
  if (cfg.lane_count < 1 || cfg.lane_count > 8) {
    throw std::invalid_argument("lane count must be in [1, 8]");
  }
  if (cfg.rule_count < 1 || cfg.rule_count > cfg.lane_count) {
    throw std::invalid_argument("rule count must be in [1, lane count]");
  }
  for (double v : {cfg.lane_width, cfg.clip_length, cfg.frame_spacing,
                   cfg.sign_distance}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("scene lengths must be positive");
    }
  }
  double total = 0.0;
  for (double w : cfg.lane_type_weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("lane type weights must be non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("lane type weights sum to 0");
}

SceneConfig random_scene(std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  SceneConfig cfg;
  cfg.lane_count = std::uniform_int_distribution<int>(1, 8)(rng);
  cfg.rule_count = std::uniform_int_distribution<int>(1, cfg.lane_count)(rng);
  return cfg;
}

void validate(const CorruptionSpec& spec) {
  for (double p : {spec.drop_rule_p, spec.perturb_property_p, spec.drop_edge_p,
                   spec.add_edge_p, spec.correct_low, spec.wrong_high}) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("corruption values must lie in [0, 1]");
    }
  }
  if (!(spec.correct_low > spec.wrong_high)) {
    throw std::invalid_argument("correct_low must exceed wrong_high");
  }
}

std::optional<double> separating_threshold(const CorruptionSpec& spec,
                                           std::span<const double> grid) {
  for (double t : grid) {
    if (t > spec.wrong_high && t <= spec.correct_low) return t;
  }
  return std::nullopt;
}

Mat3 forward_camera_rotation() {
  // Columns are the camera axes in ENU: x -> -y, y -> -z, z -> +x.
  return {{{0.0, 0.0, 1.0}, {-1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}}};
}

GeneratedScene generate_clip(const SceneConfig& cfg, std::uint64_t seed) {
  validate(cfg);
  std::mt19937_64 rng(seed);
  const int k = cfg.lane_count;
  const double w = cfg.lane_width;
  const double half_road = 0.5 * k * w;

  // Ids: k centerlines, k + 1 dividers, 2 boundaries, shuffled.
  std::vector<VectorId> ids(static_cast<std::size_t>(2 * k + 3));
  std::iota(ids.begin(), ids.end(), VectorId{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  std::size_t next = 0;

  GeneratedScene scene;
  ClipData& clip = scene.clip;
  auto add = [&](VectorType type, double y) {
    const VectorId id = ids[next++];
    clip.vectors.emplace(id, LaneVector{id, type, line_points(y, cfg.clip_length, 0.0)});
    return id;
  };
  std::vector<double> lane_y(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    lane_y[static_cast<std::size_t>(i)] = (0.5 * (k - 1) - i) * w;
    scene.lane_order.push_back(
        add(VectorType::kCenterline, lane_y[static_cast<std::size_t>(i)]));
  }
  for (int j = 0; j <= k; ++j) add(VectorType::kDivider, half_road - j * w);
  add(VectorType::kRoadBoundary, half_road + 0.5);
  add(VectorType::kRoadBoundary, -half_road - 0.5);

  const double sx = cfg.sign_distance;
  clip.sign_quad = {Point3{sx, half_road, kSignTop}, Point3{sx, half_road, kSignBottom},
                    Point3{sx, -half_road, kSignBottom}, Point3{sx, -half_road, kSignTop}};
  clip.intrinsics = {1000.0, 1000.0, 960.0, 620.0};

  const auto rotation =
      rotation_to_quat(forward_camera_rotation(), QuaternionOrder::kXyzw);
  const double ego_y = lane_y[static_cast<std::size_t>((k - 1) / 2)];
  const auto frames = static_cast<std::uint64_t>(
      std::llround(cfg.clip_length / cfg.frame_spacing));
  for (std::uint64_t i = 0; i < std::max<std::uint64_t>(frames, 1); ++i) {
    CameraPose pose;
    pose.timestamp = std::to_string(kBaseTimestampNs + i * kFramePeriodNs);
    pose.translation = {static_cast<double>(i) * cfg.frame_spacing, ego_y,
                        kCameraHeight};
    pose.rotation = rotation;
    clip.poses.emplace(pose.timestamp, pose);
  }

  for (int i = 0; i < cfg.rule_count; ++i) {
    LabeledRule r;
    r.key = std::to_string(i);
    r.rule = random_rule(cfg, rng, std::to_string(i + 1));
    r.centerline_ids = {scene.lane_order[static_cast<std::size_t>(i)]};
    const double left = half_road - i * w - 0.2;
    const double right = half_road - (i + 1) * w + 0.2;
    r.semantic_polygon = {{sx, left, kSignTop - 0.3}, {sx, left, kSignBottom + 0.3},
                          {sx, right, kSignBottom + 0.3}, {sx, right, kSignTop - 0.3}};
    scene.rules.push_back(std::move(r));
  }
  scene.graph = build_graph(scene.rules, clip);
  return scene;
}

Rule perturb_one_property(const Rule& rule, std::mt19937_64& rng) {
  Rule out = rule;
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: {
      std::vector<LaneType> others;
      for (int i = 0; i < kLaneTypeCount; ++i) {
        if (static_cast<LaneType>(i) != rule.lane_type) {
          others.push_back(static_cast<LaneType>(i));
        }
      }
      out.lane_type = pick(rng, others);
      break;
    }
    case 1: {
      std::vector<DirectionSet> others;
      for (const auto& s : valid_direction_sets()) {
        if (s != rule.lane_direction) others.push_back(s);
      }
      out.lane_direction = pick(rng, others);
      break;
    }
    case 2: {
      std::vector<Transport> others;
      for (int i = 0; i < kTransportCount; ++i) {
        if (static_cast<Transport>(i) != rule.allowed_transport) {
          others.push_back(static_cast<Transport>(i));
        }
      }
      out.allowed_transport = pick(rng, others);
      break;
    }
    default:
      out.effective_date = rule.effective_date == EffectiveDate::kNone
                               ? EffectiveDate::kWorkDays
                               : EffectiveDate::kNone;
  }
  return out;
}

Corruption corrupt(const std::vector<LabeledRule>& rules,
                   const CorrespondenceGraph& graph, const CorruptionSpec& spec,
                   std::uint64_t seed) {
  validate(spec);
  std::mt19937_64 rng(seed);
  Corruption out;
  out.expected.gt_rules = rules.size();
  out.expected.gt_edges = graph.edge_count();

  std::vector<const LabeledRule*> ordered;
  for (const auto& r : rules) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const LabeledRule* a, const LabeledRule* b) {
                     return RuleKeyLess{}(a->key, b->key);
                   });

  for (const LabeledRule* gt : ordered) {
    if (bernoulli(rng, spec.drop_rule_p)) continue;
    const bool perturbed = bernoulli(rng, spec.perturb_property_p);
    const std::size_t position = out.prediction.rules.size();
    out.prediction.rules.push_back(
        {perturbed ? perturb_one_property(gt->rule, rng) : gt->rule,
         uniform(rng, spec.correct_low, 1.0)});
    if (!perturbed) ++out.expected.rule_matches;

    std::set<VectorId> linked;
    for (const auto& e : graph.edges()) {
      if (e.rule_key == gt->key) linked.insert(e.centerline);
    }
    for (VectorId c : linked) {
      if (bernoulli(rng, spec.drop_edge_p)) continue;
      const double conf = uniform(rng, spec.correct_low, 1.0);
      out.prediction.edges.push_back({position, c, conf});
      out.edges.push_back({position, c, conf, true, !perturbed});
      ++out.expected.edge_hits;
      if (!perturbed) ++out.expected.subgraph_hits;
    }
    if (bernoulli(rng, spec.add_edge_p)) {
      std::vector<VectorId> candidates;
      for (VectorId c : graph.centerline_ids()) {
        if (!linked.contains(c)) candidates.push_back(c);
      }
      if (!candidates.empty()) {
        const VectorId c = pick(rng, candidates);
        const double conf = uniform(rng, 0.0, spec.wrong_high);
        out.prediction.edges.push_back({position, c, conf});
        out.edges.push_back({position, c, conf, false, false});
      }
    }
  }
  out.expected.pred_rules = out.prediction.rules.size();
  out.expected.pred_edges = out.prediction.edges.size();
  out.prediction = canonicalize(std::move(out.prediction));
  return out;
}

MetricFixture golden_fixture() {
  MetricFixture f;
  ClipData& clip = f.clip;
  constexpr int kCenterlines = 8;
  constexpr double kWidth = 3.5;
  const double half = 0.5 * kCenterlines * kWidth;
  for (int i = 0; i < kCenterlines; ++i) {
    const double y = half - (i + 0.5) * kWidth;
    clip.vectors.emplace(i, LaneVector{i, VectorType::kCenterline,
                                       line_points(y, 60.0, 0.0)});
  }
  clip.sign_quad = {Point3{40.0, half, kSignTop}, Point3{40.0, half, kSignBottom},
                    Point3{40.0, -half, kSignBottom}, Point3{40.0, -half, kSignTop}};
  clip.intrinsics = {1000.0, 1000.0, 960.0, 620.0};
  CameraPose pose;
  pose.timestamp = std::to_string(kBaseTimestampNs);
  pose.translation = {0.0, 0.0, kCameraHeight};
  pose.rotation = rotation_to_quat(forward_camera_rotation(), QuaternionOrder::kXyzw);
  clip.poses.emplace(pose.timestamp, pose);

  auto rule = [](LaneType type, std::string index, DirectionSet dirs) {
    Rule r;
    r.lane_type = type;
    r.rule_index = std::move(index);
    r.lane_direction = dirs;
    return r;
  };
  using D = LaneDirection;
  const std::vector<Rule> gt = {
      rule(LaneType::kDirectionLane, "1", {D::kTurnLeft}),
      rule(LaneType::kDirectionLane, "2", {D::kGoStraight}),
      rule(LaneType::kDirectionLane, "3", {D::kGoStraight, D::kTurnRight}),
      rule(LaneType::kBusLane, "4", {D::kNone}),
      rule(LaneType::kNonMotorizedLane, "5", {D::kNone}),
  };
  const std::vector<std::vector<VectorId>> links = {{0}, {1}, {2}, {3}, {4, 5}};
  for (std::size_t i = 0; i < gt.size(); ++i) {
    LabeledRule r;
    r.key = std::to_string(i);
    r.rule = gt[i];
    r.centerline_ids = links[i];
    const double left = half - static_cast<double>(i) * kWidth - 0.2;
    const double right = left - kWidth + 0.4;
    r.semantic_polygon = {{40.0, left, 6.7}, {40.0, left, 5.3},
                          {40.0, right, 5.3}, {40.0, right, 6.7}};
    f.rules.push_back(std::move(r));
  }
  f.rules[3].rule.allowed_transport = Transport::kBus;
  f.rules[4].rule.allowed_transport = Transport::kNonMotor;
  f.graph = build_graph(f.rules, clip);

  // Predicted rules 0-2 are exact; 3 and 4 each get one wrong property; 5 is
  // a rule the sign does not carry.
  Rule wrong3 = f.rules[3].rule;
  wrong3.lane_type = LaneType::kVehicleLane;
  Rule wrong4 = f.rules[4].rule;
  wrong4.allowed_transport = Transport::kVehicle;
  Rule extra = rule(LaneType::kSpeedLimitedLane, "6", {D::kNone});
  extra.high_speed_limit = "120";
  f.prediction.rules = {{f.rules[0].rule, 1.0}, {f.rules[1].rule, 1.0},
                        {f.rules[2].rule, 1.0}, {wrong3, 1.0},
                        {wrong4, 1.0},          {extra, 1.0}};
  // Right lane on a right rule: 0->0. Right lane on a wrong rule: 3->3, 4->4.
  // Wrong lane: 1->6, 5->7.
  f.prediction.edges = {{0, 0, 1.0}, {1, 6, 1.0}, {3, 3, 1.0}, {4, 4, 1.0},
                        {5, 7, 1.0}};
  f.prediction = canonicalize(std::move(f.prediction));
  return f;
}

// ---------------------------------------------------------------------------
// Manifest

namespace {

using nlohmann::json;

json scene_json(const SceneConfig& c) {
  return {{"lane_count", c.lane_count},       {"rule_count", c.rule_count},
          {"lane_width", c.lane_width},       {"clip_length", c.clip_length},
          {"frame_spacing", c.frame_spacing}, {"sign_distance", c.sign_distance},
          {"lane_type_weights", c.lane_type_weights}};
}

SceneConfig scene_from_json(const json& j) {
  SceneConfig c;
  c.lane_count = j.at("lane_count").get<int>();
  c.rule_count = j.at("rule_count").get<int>();
  c.lane_width = j.at("lane_width").get<double>();
  c.clip_length = j.at("clip_length").get<double>();
  c.frame_spacing = j.at("frame_spacing").get<double>();
  c.sign_distance = j.at("sign_distance").get<double>();
  c.lane_type_weights =
      j.at("lane_type_weights").get<std::array<double, kLaneTypeCount>>();
  return c;
}

json corruption_json(const CorruptionSpec& s) {
  return {{"drop_rule_p", s.drop_rule_p},
          {"perturb_property_p", s.perturb_property_p},
          {"drop_edge_p", s.drop_edge_p},
          {"add_edge_p", s.add_edge_p},
          {"correct_low", s.correct_low},
          {"wrong_high", s.wrong_high}};
}

CorruptionSpec corruption_from_json(const json& j) {
  CorruptionSpec s;
  s.drop_rule_p = j.at("drop_rule_p").get<double>();
  s.perturb_property_p = j.at("perturb_property_p").get<double>();
  s.drop_edge_p = j.at("drop_edge_p").get<double>();
  s.add_edge_p = j.at("add_edge_p").get<double>();
  s.correct_low = j.at("correct_low").get<double>();
  s.wrong_high = j.at("wrong_high").get<double>();
  return s;
}

json expected_json(const ExpectedCounts& e) {
  return {{"gt_rules", e.gt_rules},     {"pred_rules", e.pred_rules},
          {"rule_matches", e.rule_matches}, {"gt_edges", e.gt_edges},
          {"pred_edges", e.pred_edges}, {"edge_hits", e.edge_hits},
          {"subgraph_hits", e.subgraph_hits}};
}

ExpectedCounts expected_from_json(const json& j) {
  ExpectedCounts e;
  e.gt_rules = j.at("gt_rules").get<std::size_t>();
  e.pred_rules = j.at("pred_rules").get<std::size_t>();
  e.rule_matches = j.at("rule_matches").get<std::size_t>();
  e.gt_edges = j.at("gt_edges").get<std::size_t>();
  e.pred_edges = j.at("pred_edges").get<std::size_t>();
  e.edge_hits = j.at("edge_hits").get<std::size_t>();
  e.subgraph_hits = j.at("subgraph_hits").get<std::size_t>();
  return e;
}

}  // namespace

std::string write_manifest(const std::vector<ManifestEntry>& entries) {
  json clips = json::array();
  for (const auto& e : entries) {
    json item = {{"id", e.clip_id}, {"seed", e.seed}, {"scene", scene_json(e.scene)}};
    if (e.corruption) item["corruption"] = corruption_json(*e.corruption);
    if (e.expected) item["expected"] = expected_json(*e.expected);
    clips.push_back(std::move(item));
  }
  return json{{"clips", std::move(clips)}}.dump(2) + "\n";
}

std::vector<ManifestEntry> parse_manifest(std::string_view bytes) {
  const json doc = json::parse(bytes.begin(), bytes.end());
  std::vector<ManifestEntry> out;
  for (const auto& item : doc.at("clips")) {
    ManifestEntry e;
    e.clip_id = item.at("id").get<std::string>();
    e.seed = item.at("seed").get<std::uint64_t>();
    e.scene = scene_from_json(item.at("scene"));
    if (item.contains("corruption")) {
      e.corruption = corruption_from_json(item.at("corruption"));
    }
    if (item.contains("expected")) e.expected = expected_from_json(item.at("expected"));
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace mapdr
