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

#include "mapdr/core_model.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace mapdr {
namespace {

constexpr std::array<std::string_view, kLaneTypeCount> kLaneTypeNames = {
    "DirectionLane", "BusLane",      "EmergencyLane",
    "VariableDirectionLane", "Non-MotorizedLane", "VehicleLane",
    "TidalFlowLane", "MultiLane",    "SpeedLimitedLane"};
constexpr std::array<std::string_view, kLaneDirectionCount> kDirectionNames = {
    "None", "GoStraight", "TurnLeft", "TurnRight", "TurnAround", "Forbidden"};
constexpr std::array<std::string_view, kTransportCount> kTransportNames = {
    "None", "Bus", "Vehicle", "Non-Motor", "Truck"};
constexpr std::array<std::string_view, kEffectiveDateCount> kDateNames = {
    "None", "WorkDays"};
constexpr std::array<std::string_view, kVectorTypeCount> kVectorTypeNames = {
    "Divider", "SpecialDivider", "RoadBoundary", "Centerline", "Crosswalk"};

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<std::string_view, N>& names,
                           std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return static_cast<Enum>(i);
  }
  return std::nullopt;
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

bool is_decimal(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

std::string describe(const Point3& p) {
  std::ostringstream os;
  os << "(" << p.x << ", " << p.y << ", " << p.z << ")";
  return os.str();
}

}  // namespace

bool is_finite(const Point3& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z);
}

std::optional<VectorType> vector_type_from_code(int code) {
  if (code < 0 || code >= kVectorTypeCount) return std::nullopt;
  return static_cast<VectorType>(code);
}

std::string_view vector_type_name(VectorType type) {
  return kVectorTypeNames[static_cast<std::size_t>(type)];
}

std::vector<VectorId> ClipData::centerline_ids() const {
  std::vector<VectorId> ids;
  for (const auto& [id, v] : vectors) {
    if (v.type == VectorType::kCenterline) ids.push_back(id);
  }
  return ids;
}

bool ClipData::is_centerline(VectorId id) const {
  auto it = vectors.find(id);
  return it != vectors.end() && it->second.type == VectorType::kCenterline;
}

std::string_view to_string(LaneType v) {
  return kLaneTypeNames[static_cast<std::size_t>(v)];
}
std::string_view to_string(LaneDirection v) {
  return kDirectionNames[static_cast<std::size_t>(v)];
}
std::string_view to_string(Transport v) {
  return kTransportNames[static_cast<std::size_t>(v)];
}
std::string_view to_string(EffectiveDate v) {
  return kDateNames[static_cast<std::size_t>(v)];
}

std::optional<LaneType> parse_lane_type(std::string_view s) {
  return lookup<LaneType>(kLaneTypeNames, s);
}
std::optional<LaneDirection> parse_lane_direction(std::string_view s) {
  return lookup<LaneDirection>(kDirectionNames, s);
}
std::optional<Transport> parse_transport(std::string_view s) {
  return lookup<Transport>(kTransportNames, s);
}
std::optional<EffectiveDate> parse_effective_date(std::string_view s) {
  return lookup<EffectiveDate>(kDateNames, s);
}

DirectionSet::DirectionSet(std::initializer_list<LaneDirection> directions) {
  for (LaneDirection d : directions) insert(d);
}

std::size_t DirectionSet::size() const {
  return static_cast<std::size_t>(std::popcount(bits_));
}

DirectionSet DirectionSet::from_bits(std::uint8_t bits) {
  DirectionSet s;
  s.bits_ = static_cast<std::uint8_t>(bits & ((1u << kLaneDirectionCount) - 1));
  return s;
}

std::vector<LaneDirection> DirectionSet::members() const {
  std::vector<LaneDirection> out;
  for (int i = 0; i < kLaneDirectionCount; ++i) {
    auto d = static_cast<LaneDirection>(i);
    if (contains(d)) out.push_back(d);
  }
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

Rule normalize_rule(const Rule& rule) {
  Rule out = rule;
  out.rule_index = collapse_whitespace(rule.rule_index);
  out.effective_time = collapse_whitespace(rule.effective_time);
  out.low_speed_limit = collapse_whitespace(rule.low_speed_limit);
  out.high_speed_limit = collapse_whitespace(rule.high_speed_limit);
  return out;
}

bool rules_equal(const Rule& a, const Rule& b) {
  return normalize_rule(a) == normalize_rule(b);
}

bool RuleKeyLess::operator()(std::string_view a, std::string_view b) const {
  const bool da = is_decimal(a);
  const bool db = is_decimal(b);
  if (da != db) return da;
  if (da) {
    // Compare by magnitude without overflow: strip leading zeros first.
    auto strip = [](std::string_view s) {
      const auto pos = s.find_first_not_of('0');
      return pos == std::string_view::npos ? std::string_view{} : s.substr(pos);
    };
    const auto sa = strip(a);
    const auto sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
  }
  return a < b;
}

void CorrespondenceGraph::add_rule(std::string key) {
  rule_keys_.insert(std::move(key));
}

void CorrespondenceGraph::add_centerline(VectorId id) {
  centerlines_.insert(id);
}

bool CorrespondenceGraph::has_rule(std::string_view key) const {
  return rule_keys_.find(key) != rule_keys_.end();
}

void CorrespondenceGraph::add_edge(const std::string& rule_key,
                                   VectorId centerline) {
  if (!has_rule(rule_key)) {
    throw InvariantViolation("edge references unknown rule '" + rule_key +
                             "'");
  }
  if (!has_centerline(centerline)) {
    throw InvariantViolation("edge references unknown centerline " +
                             std::to_string(centerline));
  }
  edges_.insert(Edge{rule_key, centerline});
}

CorrespondenceGraph build_graph(const std::vector<LabeledRule>& rules,
                                const ClipData& clip) {
  CorrespondenceGraph graph;
  for (VectorId id : clip.centerline_ids()) graph.add_centerline(id);
  for (const auto& r : rules) graph.add_rule(r.key);
  for (const auto& r : rules) {
    for (VectorId id : r.centerline_ids) graph.add_edge(r.key, id);
  }
  return graph;
}

PredictionSet canonicalize(PredictionSet pred) {
  std::sort(pred.edges.begin(), pred.edges.end(),
            [](const PredictedEdge& a, const PredictedEdge& b) {
              if (a.rule_position != b.rule_position) {
                return a.rule_position < b.rule_position;
              }
              return a.centerline < b.centerline;
            });
  return pred;
}

PredictionSet prediction_from_labels(const std::vector<LabeledRule>& rules) {
  PredictionSet pred;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    pred.rules.push_back({rules[i].rule, 1.0});
    for (VectorId id : rules[i].centerline_ids) {
      pred.edges.push_back({i, id, 1.0});
    }
  }
  return canonicalize(std::move(pred));
}

bool polygon_non_degenerate(const std::vector<Point3>& polygon) {
  std::vector<Point3> distinct;
  for (const auto& p : polygon) {
    if (std::find(distinct.begin(), distinct.end(), p) == distinct.end()) {
      distinct.push_back(p);
      if (distinct.size() >= 3) return true;
    }
  }
  return false;
}

void validate(const Point3& p) {
  if (!is_finite(p)) {
    throw InvariantViolation("non-finite coordinate " + describe(p));
  }
}

void validate(const LaneVector& v) {
  if (static_cast<int>(v.type) < 0 ||
      static_cast<int>(v.type) >= kVectorTypeCount) {
    throw InvariantViolation("vector " + std::to_string(v.id) +
                             " has an unknown type");
  }
  if (v.id < 0) throw InvariantViolation("vector id must be non-negative");
  if (v.points.size() < 2) {
    throw InvariantViolation("vector " + std::to_string(v.id) +
                             " has fewer than 2 points");
  }
  for (const auto& p : v.points) validate(p);
}

void validate(const CameraIntrinsics& k) {
  if (!(std::isfinite(k.fx) && std::isfinite(k.fy) && std::isfinite(k.cx) &&
        std::isfinite(k.cy))) {
    throw InvariantViolation("non-finite camera intrinsics");
  }
  if (!(k.fx > 0.0 && k.fy > 0.0)) {
    throw InvariantViolation("focal lengths must be positive");
  }
}

void validate(const CameraPose& pose) {
  validate(pose.translation);
  double norm2 = 0.0;
  for (double c : pose.rotation) {
    if (!std::isfinite(c)) {
      throw InvariantViolation("non-finite quaternion at " + pose.timestamp);
    }
    norm2 += c * c;
  }
  if (std::abs(std::sqrt(norm2) - 1.0) > kQuaternionNormTolerance) {
    throw InvariantViolation("quaternion at " + pose.timestamp +
                             " is not unit norm");
  }
}

void validate(const ClipData& clip) {
  for (const auto& p : clip.sign_quad) validate(p);
  for (const auto& [id, v] : clip.vectors) {
    if (id != v.id) {
      throw InvariantViolation("vector key " + std::to_string(id) +
                               " does not match id " + std::to_string(v.id));
    }
    validate(v);
  }
  validate(clip.intrinsics);
  if (clip.poses.empty()) throw InvariantViolation("clip has no camera pose");
  for (const auto& [ts, pose] : clip.poses) {
    if (ts != pose.timestamp) {
      throw InvariantViolation("pose key " + ts + " does not match timestamp");
    }
    validate(pose);
  }
}

void validate(const OcrObservation& obs) {
  for (const auto& p : obs.polygon) validate(p);
  if (!polygon_non_degenerate(obs.polygon)) {
    throw InvariantViolation("observation polygon is degenerate");
  }
}

void validate(const Rule& rule) {
  if (static_cast<int>(rule.lane_type) < 0 ||
      static_cast<int>(rule.lane_type) >= kLaneTypeCount ||
      static_cast<int>(rule.allowed_transport) < 0 ||
      static_cast<int>(rule.allowed_transport) >= kTransportCount ||
      static_cast<int>(rule.effective_date) < 0 ||
      static_cast<int>(rule.effective_date) >= kEffectiveDateCount) {
    throw InvariantViolation("rule has an out-of-vocabulary value");
  }
  if (rule.lane_direction.empty()) {
    throw InvariantViolation("lane direction set is empty");
  }
  if (rule.lane_direction.contains(LaneDirection::kNone) &&
      rule.lane_direction.size() != 1) {
    throw InvariantViolation("lane direction 'None' must appear alone");
  }
}

void validate(const LabeledRule& rule, const ClipData* clip) {
  validate(rule.rule);
  for (const auto& p : rule.semantic_polygon) validate(p);
  if (!polygon_non_degenerate(rule.semantic_polygon)) {
    throw InvariantViolation("semantic polygon of rule '" + rule.key +
                             "' is degenerate");
  }
  if (clip != nullptr) {
    for (VectorId id : rule.centerline_ids) {
      if (!clip->is_centerline(id)) {
        throw InvariantViolation("rule '" + rule.key +
                                 "' references missing centerline " +
                                 std::to_string(id));
      }
    }
  }
}

void validate(const PredictionSet& pred, const ClipData* clip) {
  auto check_conf = [](double c, const std::string& what) {
    if (!(c >= 0.0 && c <= 1.0)) {
      throw InvariantViolation(what + " confidence outside [0, 1]");
    }
  };
  for (std::size_t i = 0; i < pred.rules.size(); ++i) {
    validate(pred.rules[i].rule);
    check_conf(pred.rules[i].confidence, "rule " + std::to_string(i));
  }
  std::set<std::pair<std::size_t, VectorId>> seen;
  for (const auto& e : pred.edges) {
    check_conf(e.confidence, "edge");
    if (e.rule_position >= pred.rules.size()) {
      throw InvariantViolation("edge references predicted rule " +
                               std::to_string(e.rule_position) +
                               " which does not exist");
    }
    if (!seen.insert({e.rule_position, e.centerline}).second) {
      throw InvariantViolation("duplicate predicted edge to centerline " +
                               std::to_string(e.centerline));
    }
    if (clip != nullptr && !clip->is_centerline(e.centerline)) {
      throw InvariantViolation("predicted edge references missing centerline " +
                               std::to_string(e.centerline));
    }
  }
}

}  // namespace mapdr
