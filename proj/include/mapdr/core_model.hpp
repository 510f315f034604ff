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

// Domain types shared by every module of the toolkit: clip geometry, lane
// rules, correspondence graphs and predictions. All types are plain values;
// the validate() overloads check the invariants that parsers and generators
// must uphold.

#ifndef MAPDR_CORE_MODEL_HPP_
#define MAPDR_CORE_MODEL_HPP_

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mapdr {

/// Raised when a value violates one of the model invariants.
class InvariantViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Point3&, const Point3&) = default;
};

bool is_finite(const Point3& p);

enum class VectorType : int {
  kDivider = 0,
  kSpecialDivider = 1,
  kRoadBoundary = 2,
  kCenterline = 3,
  kCrosswalk = 4,
};
inline constexpr int kVectorTypeCount = 5;

std::optional<VectorType> vector_type_from_code(int code);
std::string_view vector_type_name(VectorType type);

using VectorId = std::int64_t;

struct LaneVector {
  VectorId id = 0;
  VectorType type = VectorType::kDivider;
  std::vector<Point3> points;

  friend bool operator==(const LaneVector&, const LaneVector&) = default;
};

struct CameraIntrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;
};

/// Largest accepted deviation of a stored quaternion from unit norm.
inline constexpr double kQuaternionNormTolerance = 1e-3;

/// One camera pose. `rotation` holds the four quaternion components in file
/// order; the component convention (xyzw or wxyz) is a projection setting.
struct CameraPose {
  std::string timestamp;  // nanosecond epoch, kept as text
  Point3 translation;
  std::array<double, 4> rotation{0.0, 0.0, 0.0, 1.0};

  friend bool operator==(const CameraPose&, const CameraPose&) = default;
};

struct FrameRef {
  std::string timestamp;
  std::string image_path;

  friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

struct ClipData {
  std::array<Point3, 4> sign_quad{};
  std::map<VectorId, LaneVector> vectors;
  CameraIntrinsics intrinsics;
  std::map<std::string, CameraPose> poses;
  std::vector<FrameRef> frames;

  std::vector<VectorId> centerline_ids() const;
  bool is_centerline(VectorId id) const;

  friend bool operator==(const ClipData&, const ClipData&) = default;
};

/// Detected symbol or text region on the sign. Pixel polygons use z = 0.
struct OcrObservation {
  std::vector<Point3> polygon;
  std::string text;
};

// ---------------------------------------------------------------------------
// Rules

enum class LaneType {
  kDirectionLane,
  kBusLane,
  kEmergencyLane,
  kVariableDirectionLane,
  kNonMotorizedLane,
  kVehicleLane,
  kTidalFlowLane,
  kMultiLane,
  kSpeedLimitedLane,
};
inline constexpr int kLaneTypeCount = 9;

enum class LaneDirection {
  kNone,
  kGoStraight,
  kTurnLeft,
  kTurnRight,
  kTurnAround,
  kForbidden,
};
inline constexpr int kLaneDirectionCount = 6;

enum class Transport { kNone, kBus, kVehicle, kNonMotor, kTruck };
inline constexpr int kTransportCount = 5;

enum class EffectiveDate { kNone, kWorkDays };
inline constexpr int kEffectiveDateCount = 2;

std::string_view to_string(LaneType v);
std::string_view to_string(LaneDirection v);
std::string_view to_string(Transport v);
std::string_view to_string(EffectiveDate v);

std::optional<LaneType> parse_lane_type(std::string_view s);
std::optional<LaneDirection> parse_lane_direction(std::string_view s);
std::optional<Transport> parse_transport(std::string_view s);
std::optional<EffectiveDate> parse_effective_date(std::string_view s);

/// Set of lane directions. Order of insertion is irrelevant.
class DirectionSet {
 public:
  DirectionSet() = default;
  DirectionSet(std::initializer_list<LaneDirection> directions);

  void insert(LaneDirection d) { bits_ |= bit(d); }
  void erase(LaneDirection d) { bits_ &= static_cast<std::uint8_t>(~bit(d)); }
  bool contains(LaneDirection d) const { return (bits_ & bit(d)) != 0; }
  bool empty() const { return bits_ == 0; }
  std::size_t size() const;
  std::uint8_t bits() const { return bits_; }
  static DirectionSet from_bits(std::uint8_t bits);

  /// Members in enumeration order.
  std::vector<LaneDirection> members() const;

  friend bool operator==(const DirectionSet&, const DirectionSet&) = default;
  friend auto operator<=>(const DirectionSet&, const DirectionSet&) = default;

 private:
  static std::uint8_t bit(LaneDirection d) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(d));
  }
  std::uint8_t bits_ = 0;
};

/// One lane-level driving rule with its eight properties.
struct Rule {
  LaneType lane_type = LaneType::kDirectionLane;
  std::string rule_index;
  DirectionSet lane_direction{LaneDirection::kNone};
  Transport allowed_transport = Transport::kNone;
  EffectiveDate effective_date = EffectiveDate::kNone;
  std::string effective_time = "None";
  std::string low_speed_limit = "None";
  std::string high_speed_limit = "None";

  friend bool operator==(const Rule&, const Rule&) = default;
  friend auto operator<=>(const Rule&, const Rule&) = default;
};

/// Trims text properties and collapses internal whitespace runs to a single
/// space. Enumerated properties are left untouched. Idempotent.
Rule normalize_rule(const Rule& rule);

/// Exact equality of all eight normalized properties. Text comparison is
/// case-sensitive.
bool rules_equal(const Rule& a, const Rule& b);

std::string collapse_whitespace(std::string_view text);

struct LabeledRule {
  std::string key;  // top-level key in the label file
  Rule rule;
  std::vector<VectorId> centerline_ids;
  std::vector<Point3> semantic_polygon;

  friend bool operator==(const LabeledRule&, const LabeledRule&) = default;
};

/// Orders rule keys numerically when both are decimal, lexically otherwise
/// (numeric keys first).
struct RuleKeyLess {
  bool operator()(std::string_view a, std::string_view b) const;
};

struct Edge {
  std::string rule_key;
  VectorId centerline = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Bipartite rule/centerline graph. Nodes must be registered before edges
/// that reference them.
class CorrespondenceGraph {
 public:
  void add_rule(std::string key);
  void add_centerline(VectorId id);
  /// Throws InvariantViolation if either endpoint is unknown.
  void add_edge(const std::string& rule_key, VectorId centerline);

  bool has_rule(std::string_view key) const;
  bool has_centerline(VectorId id) const { return centerlines_.contains(id); }
  bool contains(const Edge& e) const { return edges_.contains(e); }

  const std::set<Edge>& edges() const { return edges_; }
  const std::set<std::string, std::less<>>& rule_keys() const {
    return rule_keys_;
  }
  const std::set<VectorId>& centerline_ids() const { return centerlines_; }
  std::size_t edge_count() const { return edges_.size(); }

  friend bool operator==(const CorrespondenceGraph&,
                         const CorrespondenceGraph&) = default;

 private:
  std::set<std::string, std::less<>> rule_keys_;
  std::set<VectorId> centerlines_;
  std::set<Edge> edges_;
};

/// Builds the graph from labeled rules over the clip's centerlines. Edges to
/// ids that are not centerlines of `clip` throw InvariantViolation.
CorrespondenceGraph build_graph(const std::vector<LabeledRule>& rules,
                                const ClipData& clip);

// ---------------------------------------------------------------------------
// Predictions

struct PredictedRule {
  Rule rule;
  double confidence = 1.0;

  friend bool operator==(const PredictedRule&, const PredictedRule&) = default;
};

/// Edge from a predicted rule, addressed by its position in the prediction.
struct PredictedEdge {
  std::size_t rule_position = 0;
  VectorId centerline = 0;
  double confidence = 1.0;

  friend bool operator==(const PredictedEdge&, const PredictedEdge&) = default;
};

struct PredictionSet {
  std::vector<PredictedRule> rules;
  std::vector<PredictedEdge> edges;

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Sorts edges by (rule position, centerline id).
PredictionSet canonicalize(PredictionSet pred);

/// Converts ground-truth labels to a prediction with every confidence at 1.
PredictionSet prediction_from_labels(const std::vector<LabeledRule>& rules);

// ---------------------------------------------------------------------------
// Invariant checks. Each throws InvariantViolation describing the first
// violation found.

void validate(const Point3& p);
void validate(const LaneVector& v);
void validate(const CameraIntrinsics& k);
void validate(const CameraPose& pose);
void validate(const ClipData& clip);
void validate(const OcrObservation& obs);
void validate(const Rule& rule);
void validate(const LabeledRule& rule, const ClipData* clip);
void validate(const PredictionSet& pred, const ClipData* clip);

/// True when the polygon has at least three pairwise distinct vertices.
bool polygon_non_degenerate(const std::vector<Point3>& polygon);

}  // namespace mapdr

#endif  // MAPDR_CORE_MODEL_HPP_
