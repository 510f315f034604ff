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

// Camera and ENU geometry: quaternion rotations, pinhole projection with
// near-plane clipping, lateral ordering of centerlines under a sign, and the
// SVG overlay renderer.

#ifndef MAPDR_GEOMETRY_HPP_
#define MAPDR_GEOMETRY_HPP_

#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mapdr/core_model.hpp"

namespace mapdr {

enum class QuaternionOrder { kXyzw, kWxyz };
enum class PoseDirection { kCameraToWorld, kWorldToCamera };

struct ProjectionConfig {
  QuaternionOrder quaternion_order = QuaternionOrder::kXyzw;
  PoseDirection pose_direction = PoseDirection::kCameraToWorld;
  double near_clip = 0.1;  // meters
  int image_width = 1920;
  int image_height = 1240;
};

void validate(const ProjectionConfig& cfg);

/// Applies "key=value" overrides separated by ',' or ';'. Keys: quat
/// (xyzw|wxyz), pose (camera_to_world|world_to_camera), near (meters),
/// width, height. Throws std::invalid_argument on unknown keys or values.
ProjectionConfig parse_conventions(std::string_view spec,
                                   ProjectionConfig base = {});

std::string_view to_string(QuaternionOrder order);
std::string_view to_string(PoseDirection direction);

using Mat3 = std::array<std::array<double, 3>, 3>;

/// Rotation matrix of a quaternion given in `order`. The quaternion is
/// normalized first; a norm further than kQuaternionNormTolerance from 1
/// throws InvariantViolation.
Mat3 quat_to_rotation(const std::array<double, 4>& q, QuaternionOrder order);

/// Inverse of quat_to_rotation for proper rotations; returns `order`
/// components with a non-negative scalar part.
std::array<double, 4> rotation_to_quat(const Mat3& r, QuaternionOrder order);

Point3 apply(const Mat3& r, const Point3& p);
Point3 apply_transpose(const Mat3& r, const Point3& p);

/// World point expressed in the camera frame (x right, y down, z forward).
Point3 world_to_camera(const Point3& p, const CameraPose& pose,
                       const ProjectionConfig& cfg);

struct Pixel {
  double u = 0.0;
  double v = 0.0;

  friend bool operator==(const Pixel&, const Pixel&) = default;
};

struct BehindCamera {
  friend bool operator==(const BehindCamera&, const BehindCamera&) = default;
};

using ProjectedPoint = std::variant<Pixel, BehindCamera>;

/// Pinhole projection of a camera-frame point; BehindCamera when z < near.
ProjectedPoint project_camera_point(const Point3& cam,
                                    const CameraIntrinsics& k,
                                    const ProjectionConfig& cfg);

ProjectedPoint project_point(const Point3& p, const CameraPose& pose,
                             const CameraIntrinsics& k,
                             const ProjectionConfig& cfg);

struct Segment2 {
  Pixel a;
  Pixel b;
};

/// One segment per consecutive point pair that is at least partly in front
/// of the near plane. Pairs crossing the plane are cut at z = near_clip.
std::vector<Segment2> project_polyline(const std::vector<Point3>& points,
                                       const CameraPose& pose,
                                       const CameraIntrinsics& k,
                                       const ProjectionConfig& cfg);

inline std::vector<Segment2> project_polyline(const LaneVector& v,
                                              const CameraPose& pose,
                                              const CameraIntrinsics& k,
                                              const ProjectionConfig& cfg) {
  return project_polyline(v.points, pose, k, cfg);
}

/// Area of the sign quad in square meters (planar quad formula).
double quad_area(const std::array<Point3, 4>& quad);

inline constexpr double kMinSignArea = 1e-6;

/// Centerline ids ordered left to right for a viewer facing the sign. The
/// viewing direction is the mean travel direction of the centerlines; the
/// lateral axis is the principal horizontal direction of the sign quad.
/// Throws InvariantViolation for an empty input or a degenerate quad.
std::vector<VectorId> lateral_order(const std::vector<LaneVector>& centerlines,
                                    const std::array<Point3, 4>& sign_quad);

/// lateral_order over the type-3 vectors of a clip.
std::vector<VectorId> lateral_order(const ClipData& clip);

// ---------------------------------------------------------------------------
// Overlay

/// Stroke colors by vector type, indexed by type code.
inline constexpr std::array<std::string_view, kVectorTypeCount>
    kVectorPalette = {"#1f77b4", "#9467bd", "#7f7f7f", "#d62728", "#ff7f0e"};
inline constexpr std::string_view kSignColor = "#2ca02c";
inline constexpr std::string_view kSemanticColor = "#bcbd22";

/// SVG overlay of one frame: a path per visible vector (class "vec type-N",
/// id "vector-<id>"), the sign quad, and each semantic polygon.
std::string render_overlay_svg(const ClipData& clip,
                               const std::vector<LabeledRule>& rules,
                               const CameraPose& pose,
                               const ProjectionConfig& cfg);

}  // namespace mapdr

#endif  // MAPDR_GEOMETRY_HPP_
