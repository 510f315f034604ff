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

#include "mapdr/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mapdr {
namespace {

Point3 operator-(const Point3& a, const Point3& b) {
  return {a.x - b.x, a.y - b.y, a.z - b.z};
}
Point3 operator+(const Point3& a, const Point3& b) {
  return {a.x + b.x, a.y + b.y, a.z + b.z};
}
Point3 operator*(double s, const Point3& a) { return {s * a.x, s * a.y, s * a.z}; }

Point3 cross(const Point3& a, const Point3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z,
          a.x * b.y - a.y * b.x};
}
double norm(const Point3& a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

void validate(const ProjectionConfig& cfg) {
  if (!(cfg.near_clip > 0.0) || !std::isfinite(cfg.near_clip)) {
    throw std::invalid_argument("near clip must be positive");
  }
  if (cfg.image_width <= 0 || cfg.image_height <= 0) {
    throw std::invalid_argument("image size must be positive");
  }
}

std::string_view to_string(QuaternionOrder order) {
  return order == QuaternionOrder::kXyzw ? "xyzw" : "wxyz";
}

std::string_view to_string(PoseDirection direction) {
  return direction == PoseDirection::kCameraToWorld ? "camera_to_world"
                                                    : "world_to_camera";
}

ProjectionConfig parse_conventions(std::string_view spec,
                                   ProjectionConfig base) {
  std::size_t start = 0;
  while (start <= spec.size()) {
    std::size_t end = spec.find_first_of(",;", start);
    if (end == std::string_view::npos) end = spec.size();
    const std::string item = trim(spec.substr(start, end - start));
    start = end + 1;
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("convention '" + item + "' lacks '='");
    }
    const std::string key = trim(std::string_view(item).substr(0, eq));
    const std::string value = trim(std::string_view(item).substr(eq + 1));
    if (key == "quat") {
      if (value == "xyzw") {
        base.quaternion_order = QuaternionOrder::kXyzw;
      } else if (value == "wxyz") {
        base.quaternion_order = QuaternionOrder::kWxyz;
      } else {
        throw std::invalid_argument("unknown quaternion order '" + value + "'");
      }
    } else if (key == "pose") {
      if (value == "camera_to_world") {
        base.pose_direction = PoseDirection::kCameraToWorld;
      } else if (value == "world_to_camera") {
        base.pose_direction = PoseDirection::kWorldToCamera;
      } else {
        throw std::invalid_argument("unknown pose direction '" + value + "'");
      }
    } else if (key == "near") {
      base.near_clip = std::stod(value);
    } else if (key == "width") {
      base.image_width = std::stoi(value);
    } else if (key == "height") {
      base.image_height = std::stoi(value);
    } else {
      throw std::invalid_argument("unknown convention key '" + key + "'");
    }
  }
  validate(base);
  return base;
}

Mat3 quat_to_rotation(const std::array<double, 4>& q, QuaternionOrder order) {
  double x, y, z, w;
  if (order == QuaternionOrder::kXyzw) {
    x = q[0], y = q[1], z = q[2], w = q[3];
  } else {
    w = q[0], x = q[1], y = q[2], z = q[3];
  }
  const double n = std::sqrt(x * x + y * y + z * z + w * w);
  if (!std::isfinite(n) || std::abs(n - 1.0) > kQuaternionNormTolerance) {
    throw InvariantViolation("quaternion is not within tolerance of unit norm");
  }
  x /= n, y /= n, z /= n, w /= n;
  return {{{1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)},
           {2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)},
           {2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)}}};
}

std::array<double, 4> rotation_to_quat(const Mat3& r, QuaternionOrder order) {
  double x, y, z, w;
  const double trace = r[0][0] + r[1][1] + r[2][2];
  if (trace > 0) {
    const double s = 2.0 * std::sqrt(1.0 + trace);
    w = 0.25 * s;
    x = (r[2][1] - r[1][2]) / s;
    y = (r[0][2] - r[2][0]) / s;
    z = (r[1][0] - r[0][1]) / s;
  } else if (r[0][0] > r[1][1] && r[0][0] > r[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + r[0][0] - r[1][1] - r[2][2]);
    w = (r[2][1] - r[1][2]) / s;
    x = 0.25 * s;
    y = (r[0][1] + r[1][0]) / s;
    z = (r[0][2] + r[2][0]) / s;
  } else if (r[1][1] > r[2][2]) {
    const double s = 2.0 * std::sqrt(1.0 + r[1][1] - r[0][0] - r[2][2]);
    w = (r[0][2] - r[2][0]) / s;
    x = (r[0][1] + r[1][0]) / s;
    y = 0.25 * s;
    z = (r[1][2] + r[2][1]) / s;
  } else {
    const double s = 2.0 * std::sqrt(1.0 + r[2][2] - r[0][0] - r[1][1]);
    w = (r[1][0] - r[0][1]) / s;
    x = (r[0][2] + r[2][0]) / s;
    y = (r[1][2] + r[2][1]) / s;
    z = 0.25 * s;
  }
  if (w < 0) x = -x, y = -y, z = -z, w = -w;
  if (order == QuaternionOrder::kXyzw) return {x, y, z, w};
  return {w, x, y, z};
}

Point3 apply(const Mat3& r, const Point3& p) {
  return {r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z,
          r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z,
          r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z};
}

Point3 apply_transpose(const Mat3& r, const Point3& p) {
  return {r[0][0] * p.x + r[1][0] * p.y + r[2][0] * p.z,
          r[0][1] * p.x + r[1][1] * p.y + r[2][1] * p.z,
          r[0][2] * p.x + r[1][2] * p.y + r[2][2] * p.z};
}

Point3 world_to_camera(const Point3& p, const CameraPose& pose,
                       const ProjectionConfig& cfg) {
  const Mat3 r = quat_to_rotation(pose.rotation, cfg.quaternion_order);
  if (cfg.pose_direction == PoseDirection::kCameraToWorld) {
    return apply_transpose(r, p - pose.translation);
  }
  return apply(r, p) + pose.translation;
}

ProjectedPoint project_camera_point(const Point3& cam,
                                    const CameraIntrinsics& k,
                                    const ProjectionConfig& cfg) {
  if (!(cam.z >= cfg.near_clip)) return BehindCamera{};
  return Pixel{k.fx * cam.x / cam.z + k.cx, k.fy * cam.y / cam.z + k.cy};
}

ProjectedPoint project_point(const Point3& p, const CameraPose& pose,
                             const CameraIntrinsics& k,
                             const ProjectionConfig& cfg) {
  return project_camera_point(world_to_camera(p, pose, cfg), k, cfg);
}

std::vector<Segment2> project_polyline(const std::vector<Point3>& points,
                                       const CameraPose& pose,
                                       const CameraIntrinsics& k,
                                       const ProjectionConfig& cfg) {
  std::vector<Point3> cam;
  cam.reserve(points.size());
  for (const auto& p : points) cam.push_back(world_to_camera(p, pose, cfg));

  const double near = cfg.near_clip;
  std::vector<Segment2> out;
  for (std::size_t i = 0; i + 1 < cam.size(); ++i) {
    Point3 a = cam[i];
    Point3 b = cam[i + 1];
    const bool a_in = a.z >= near;
    const bool b_in = b.z >= near;
    if (!a_in && !b_in) continue;
    if (!a_in || !b_in) {
      const double s = (near - a.z) / (b.z - a.z);
      Point3 cut = a + s * (b - a);
      cut.z = near;
      (a_in ? b : a) = cut;
    }
    out.push_back({std::get<Pixel>(project_camera_point(a, k, cfg)),
                   std::get<Pixel>(project_camera_point(b, k, cfg))});
  }
  return out;
}

double quad_area(const std::array<Point3, 4>& quad) {
  return 0.5 * norm(cross(quad[2] - quad[0], quad[3] - quad[1]));
}

std::vector<VectorId> lateral_order(const std::vector<LaneVector>& centerlines,
                                    const std::array<Point3, 4>& sign_quad) {
  if (centerlines.empty()) {
    throw InvariantViolation("lateral order needs at least one centerline");
  }
  if (quad_area(sign_quad) < kMinSignArea) {
    throw InvariantViolation("sign quad is degenerate");
  }

  Point3 center{};
  for (const auto& p : sign_quad) center = center + 0.25 * p;

  // Principal horizontal direction of the quad.
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : sign_quad) {
    const double dx = p.x - center.x;
    const double dy = p.y - center.y;
    sxx += dx * dx, syy += dy * dy, sxy += dx * dy;
  }
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  double ax = std::cos(angle);
  double ay = std::sin(angle);

  // Travel direction; "right" for a viewer looking along it is (fy, -fx).
  double fx = 0, fy = 0;
  for (const auto& c : centerlines) {
    const Point3 d = c.points.back() - c.points.front();
    const double len = std::hypot(d.x, d.y);
    if (len > 0) fx += d.x / len, fy += d.y / len;
  }
  if (fx != 0.0 || fy != 0.0) {
    if (ax * fy - ay * fx < 0) ax = -ax, ay = -ay;
  }

  std::vector<std::pair<double, VectorId>> keyed;
  keyed.reserve(centerlines.size());
  for (const auto& c : centerlines) {
    if (c.points.empty()) throw InvariantViolation("centerline has no points");
    const Point3* nearest = &c.points.front();
    double best = norm(*nearest - center);
    for (const auto& p : c.points) {
      const double d = norm(p - center);
      if (d < best) best = d, nearest = &p;
    }
    const double offset =
        (nearest->x - center.x) * ax + (nearest->y - center.y) * ay;
    keyed.emplace_back(offset, c.id);
  }
  std::sort(keyed.begin(), keyed.end());
  std::vector<VectorId> ids;
  ids.reserve(keyed.size());
  for (const auto& [offset, id] : keyed) ids.push_back(id);
  return ids;
}

std::vector<VectorId> lateral_order(const ClipData& clip) {
  std::vector<LaneVector> centerlines;
  for (const auto& [id, v] : clip.vectors) {
    if (v.type == VectorType::kCenterline) centerlines.push_back(v);
  }
  return lateral_order(centerlines, clip.sign_quad);
}

// ---------------------------------------------------------------------------
// Overlay

namespace {

void append_number(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  out += buf;
}

std::string path_data(const std::vector<Segment2>& segments) {
  std::string d;
  for (const auto& s : segments) {
    if (!d.empty()) d.push_back(' ');
    d += "M ";
    append_number(d, s.a.u);
    d.push_back(' ');
    append_number(d, s.a.v);
    d += " L ";
    append_number(d, s.b.u);
    d.push_back(' ');
    append_number(d, s.b.v);
  }
  return d;
}

std::vector<Point3> closed(std::vector<Point3> pts) {
  if (!pts.empty()) pts.push_back(pts.front());
  return pts;
}

}  // namespace

std::string render_overlay_svg(const ClipData& clip,
                               const std::vector<LabeledRule>& rules,
                               const CameraPose& pose,
                               const ProjectionConfig& cfg) {
  validate(cfg);
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << cfg.image_width
     << "\" height=\"" << cfg.image_height << "\" viewBox=\"0 0 "
     << cfg.image_width << " " << cfg.image_height << "\">\n";
  os << "  <title>frame " << pose.timestamp << "</title>\n";

  for (const auto& [id, v] : clip.vectors) {
    const auto segments = project_polyline(v, pose, clip.intrinsics, cfg);
    if (segments.empty()) continue;
    const int code = static_cast<int>(v.type);
    os << "  <path id=\"vector-" << id << "\" class=\"vec type-" << code
       << "\" fill=\"none\" stroke=\"" << kVectorPalette[code]
       << "\" stroke-width=\"3\" d=\"" << path_data(segments) << "\"/>\n";
  }

  const std::vector<Point3> quad(clip.sign_quad.begin(), clip.sign_quad.end());
  const auto sign = project_polyline(closed(quad), pose, clip.intrinsics, cfg);
  if (!sign.empty()) {
    os << "  <path id=\"sign\" class=\"sign\" fill=\"none\" stroke=\""
       << kSignColor << "\" stroke-width=\"2\" d=\"" << path_data(sign)
       << "\"/>\n";
  }
  for (const auto& r : rules) {
    const auto poly =
        project_polyline(closed(r.semantic_polygon), pose, clip.intrinsics, cfg);
    if (poly.empty()) continue;
    os << "  <path id=\"semantic-" << r.key
       << "\" class=\"semantic\" fill=\"none\" stroke=\"" << kSemanticColor
       << "\" stroke-width=\"1\" d=\"" << path_data(poly) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace mapdr
