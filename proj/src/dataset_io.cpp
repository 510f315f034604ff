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

#include "mapdr/dataset_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include "json.hpp"

namespace mapdr {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kAttrLaneType = "LaneType";
constexpr std::string_view kAttrRuleIndex = "RuleIndex";
constexpr std::string_view kAttrLaneDirection = "LaneDirection";
constexpr std::string_view kAttrEffectiveTime = "EffectiveTime";
constexpr std::string_view kAttrAllowedTransport = "AllowedTransport";
constexpr std::string_view kAttrEffectiveDate = "EffectiveDate";
constexpr std::string_view kAttrLowSpeedLimit = "LowSpeedLimit";
constexpr std::string_view kAttrHighSpeedLimit = "HighSpeedLimit";

const std::initializer_list<std::string_view> kAttrKeys = {
    kAttrLaneType,         kAttrRuleIndex,        kAttrLaneDirection,
    kAttrEffectiveTime,    kAttrAllowedTransport, kAttrEffectiveDate,
    kAttrLowSpeedLimit,    kAttrHighSpeedLimit};

std::string escape_token(std::string_view key) {
  std::string out;
  for (char c : key) {
    if (c == '~') {
      out += "~0";
    } else if (c == '/') {
      out += "~1";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::string at(const std::string& path, std::string_view key) {
  return path + "/" + escape_token(key);
}

std::string at(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::optional<std::int64_t> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc{} || ptr != end || value < 0) return std::nullopt;
  return value;
}

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return c >= '0' && c <= '9';
  });
}

// Accumulates issues while walking a document.
class Reader {
 public:
  void error(std::string path, std::string message) {
    issues_.push_back({Severity::kError, std::move(path), std::move(message)});
  }
  void warn(std::string path, std::string message) {
    issues_.push_back(
        {Severity::kWarning, std::move(path), std::move(message)});
  }

  bool has_errors() const {
    return std::any_of(issues_.begin(), issues_.end(), [](const auto& i) {
      return i.severity == Severity::kError;
    });
  }

  // Throws when any error was recorded; otherwise hands back the warnings.
  std::vector<ValidationIssue> finish() {
    if (has_errors()) throw DatasetError(std::move(issues_));
    return std::move(issues_);
  }

  std::optional<json> parse(std::string_view bytes) {
    try {
      return json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
      error("", "malformed JSON at byte " + std::to_string(e.byte) + ": " +
                    e.what());
      return std::nullopt;
    } catch (const json::exception& e) {
      error("", std::string("unreadable JSON: ") + e.what());
      return std::nullopt;
    }
  }

  bool expect_object(const json& v, const std::string& path) {
    if (v.is_object()) return true;
    error(path, "expected an object");
    return false;
  }

  bool expect_array(const json& v, const std::string& path) {
    if (v.is_array()) return true;
    error(path, "expected an array");
    return false;
  }

  const json* member(const json& obj, std::string_view key,
                     const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
      error(path, "missing key \"" + std::string(key) + "\"");
      return nullptr;
    }
    return &*it;
  }

  void unknown_keys(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> known,
                    Severity severity) {
    for (const auto& [key, value] : obj.items()) {
      if (std::find(known.begin(), known.end(), key) != known.end()) continue;
      issues_.push_back(
          {severity, at(path, key), "unknown key \"" + key + "\""});
    }
  }

  std::optional<double> number(const json& v, const std::string& path) {
    if (!v.is_number()) {
      error(path, "expected a number");
      return std::nullopt;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d)) {
      error(path, "non-finite number");
      return std::nullopt;
    }
    return d;
  }

  std::optional<std::string> text(const json& v, const std::string& path) {
    if (!v.is_string()) {
      error(path, "expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  std::optional<std::vector<double>> numbers(const json& v,
                                             const std::string& path,
                                             std::size_t arity) {
    if (!expect_array(v, path)) return std::nullopt;
    if (v.size() != arity) {
      error(path, "expected " + std::to_string(arity) + " numbers, found " +
                      std::to_string(v.size()));
      return std::nullopt;
    }
    std::vector<double> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto d = number(v[i], at(path, i));
      ok = ok && d.has_value();
      out.push_back(d.value_or(0.0));
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<Point3> point(const json& v, const std::string& path) {
    auto n = numbers(v, path, 3);
    if (!n) return std::nullopt;
    return Point3{(*n)[0], (*n)[1], (*n)[2]};
  }

  std::optional<std::vector<Point3>> points(const json& v,
                                            const std::string& path,
                                            std::size_t min_count) {
    if (!expect_array(v, path)) return std::nullopt;
    if (v.size() < min_count) {
      error(path, "expected at least " + std::to_string(min_count) +
                      " points, found " + std::to_string(v.size()));
      return std::nullopt;
    }
    std::vector<Point3> out;
    bool ok = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      auto p = point(v[i], at(path, i));
      ok = ok && p.has_value();
      if (p) out.push_back(*p);
    }
    if (!ok) return std::nullopt;
    return out;
  }

  std::optional<double> confidence(const json& v, const std::string& path) {
    auto c = number(v, path);
    if (!c) return std::nullopt;
    if (*c < 0.0 || *c > 1.0) {
      error(path, "confidence outside [0, 1]");
      return std::nullopt;
    }
    return c;
  }

 private:
  std::vector<ValidationIssue> issues_;
};

json point_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

json points_json(const std::vector<Point3>& pts) {
  json out = json::array();
  for (const auto& p : pts) out.push_back(point_json(p));
  return out;
}

template <typename Enum>
std::optional<Enum> read_enum(Reader& r, const json& v, const std::string& path,
                              std::optional<Enum> (*parse)(std::string_view),
                              std::string_view what) {
  auto s = r.text(v, path);
  if (!s) return std::nullopt;
  auto e = parse(*s);
  if (!e) {
    r.error(path, "unknown " + std::string(what) + " \"" + *s + "\"");
  }
  return e;
}

std::optional<Rule> read_attr_info(Reader& r, const json& attr,
                                   const std::string& path,
                                   Severity unknown_key_severity) {
  if (!r.expect_object(attr, path)) return std::nullopt;
  r.unknown_keys(attr, path, kAttrKeys, unknown_key_severity);

  Rule rule;
  bool ok = true;
  auto field = [&](std::string_view key) -> const json* {
    const json* v = r.member(attr, key, path);
    ok = ok && v != nullptr;
    return v;
  };

  if (const json* v = field(kAttrLaneType)) {
    auto e = read_enum<LaneType>(r, *v, at(path, kAttrLaneType),
                                 parse_lane_type, "lane type");
    ok = ok && e.has_value();
    if (e) rule.lane_type = *e;
  }
  if (const json* v = field(kAttrRuleIndex)) {
    auto s = r.text(*v, at(path, kAttrRuleIndex));
    ok = ok && s.has_value();
    if (s) rule.rule_index = *s;
  }
  if (const json* v = field(kAttrLaneDirection)) {
    const std::string dpath = at(path, kAttrLaneDirection);
    if (r.expect_array(*v, dpath)) {
      DirectionSet set;
      for (std::size_t i = 0; i < v->size(); ++i) {
        auto d = read_enum<LaneDirection>(r, (*v)[i], at(dpath, i),
                                          parse_lane_direction,
                                          "lane direction");
        if (!d) {
          ok = false;
          continue;
        }
        if (set.contains(*d)) r.warn(at(dpath, i), "duplicate lane direction");
        set.insert(*d);
      }
      if (v->empty()) {
        r.error(dpath, "lane direction list is empty");
        ok = false;
      } else if (set.contains(LaneDirection::kNone) && set.size() > 1) {
        r.error(dpath, "\"None\" cannot be combined with other directions");
        ok = false;
      }
      rule.lane_direction = set;
    } else {
      ok = false;
    }
  }
  if (const json* v = field(kAttrAllowedTransport)) {
    auto e = read_enum<Transport>(r, *v, at(path, kAttrAllowedTransport),
                                  parse_transport, "allowed transport");
    ok = ok && e.has_value();
    if (e) rule.allowed_transport = *e;
  }
  if (const json* v = field(kAttrEffectiveDate)) {
    auto e = read_enum<EffectiveDate>(r, *v, at(path, kAttrEffectiveDate),
                                      parse_effective_date, "effective date");
    ok = ok && e.has_value();
    if (e) rule.effective_date = *e;
  }
  auto read_text = [&](std::string_view key, std::string& out) {
    if (const json* v = field(key)) {
      auto s = r.text(*v, at(path, key));
      ok = ok && s.has_value();
      if (s) out = *s;
    }
  };
  read_text(kAttrEffectiveTime, rule.effective_time);
  read_text(kAttrLowSpeedLimit, rule.low_speed_limit);
  read_text(kAttrHighSpeedLimit, rule.high_speed_limit);

  if (!ok) return std::nullopt;
  return rule;
}

json attr_info_json(const Rule& rule) {
  json directions = json::array();
  for (LaneDirection d : rule.lane_direction.members()) {
    directions.push_back(std::string(to_string(d)));
  }
  json attr = json::object();
  attr[std::string(kAttrLaneType)] = std::string(to_string(rule.lane_type));
  attr[std::string(kAttrRuleIndex)] = rule.rule_index;
  attr[std::string(kAttrLaneDirection)] = std::move(directions);
  attr[std::string(kAttrEffectiveTime)] = rule.effective_time;
  attr[std::string(kAttrAllowedTransport)] =
      std::string(to_string(rule.allowed_transport));
  attr[std::string(kAttrEffectiveDate)] =
      std::string(to_string(rule.effective_date));
  attr[std::string(kAttrLowSpeedLimit)] = rule.low_speed_limit;
  attr[std::string(kAttrHighSpeedLimit)] = rule.high_speed_limit;
  return attr;
}

std::string prefix_path(std::string_view file, const std::string& pointer) {
  return std::string(file) + "#" + pointer;
}

void prefix_issues(std::vector<ValidationIssue>& issues,
                   std::string_view file) {
  for (auto& i : issues) i.path = prefix_path(file, i.path);
}

std::vector<FrameRef> scan_frames(const fs::path& dir) {
  std::vector<FrameRef> frames;
  const fs::path frames_dir = dir / kFramesDir;
  std::error_code ec;
  if (!fs::is_directory(frames_dir, ec)) return frames;
  for (const auto& entry : fs::directory_iterator(frames_dir)) {
    if (!entry.is_regular_file()) continue;
    const fs::path name = entry.path().filename();
    frames.push_back({name.stem().string(),
                      (fs::path(kFramesDir) / name).generic_string()});
  }
  std::sort(frames.begin(), frames.end(),
            [](const FrameRef& a, const FrameRef& b) {
              return a.timestamp < b.timestamp;
            });
  return frames;
}

}  // namespace

std::string_view to_string(Severity s) {
  return s == Severity::kError ? "error" : "warning";
}

std::string format_issue(const ValidationIssue& issue) {
  const std::string path = issue.path.empty() ? "/" : issue.path;
  return std::string(to_string(issue.severity)) + " " + path + " " +
         issue.message;
}

namespace {
std::string summarize(const std::vector<ValidationIssue>& issues) {
  std::ostringstream os;
  std::size_t shown = 0;
  for (const auto& i : issues) {
    if (i.severity != Severity::kError) continue;
    if (shown++ > 0) os << "; ";
    os << format_issue(i);
    if (shown == 5) break;
  }
  return os.str();
}
}  // namespace

DatasetError::DatasetError(std::vector<ValidationIssue> issues)
    : std::runtime_error(summarize(issues)), issues_(std::move(issues)) {}

// ---------------------------------------------------------------------------
// Clip data

Parsed<ClipData> parse_clip(std::string_view bytes) {
  Reader r;
  ClipData clip;
  auto doc = r.parse(bytes);
  if (!doc) r.finish();
  if (!r.expect_object(*doc, "")) r.finish();

  r.unknown_keys(*doc, "",
                 {"traffic_board_pose", "vector", "camera_intrinsic_matrix",
                  "camera_pose"},
                 Severity::kWarning);

  if (const json* quad = r.member(*doc, "traffic_board_pose", "")) {
    const std::string path = "/traffic_board_pose";
    if (auto pts = r.points(*quad, path, 4)) {
      if (pts->size() != 4) {
        r.error(path, "expected exactly 4 points, found " +
                          std::to_string(pts->size()));
      } else {
        std::copy(pts->begin(), pts->end(), clip.sign_quad.begin());
      }
    }
  }

  if (const json* vectors = r.member(*doc, "vector", "")) {
    const std::string path = "/vector";
    if (r.expect_object(*vectors, path)) {
      for (const auto& [key, entry] : vectors->items()) {
        const std::string vpath = at(path, key);
        auto id = parse_decimal(key);
        if (!id || !all_digits(key)) {
          r.error(vpath, "vector key must be a non-negative decimal integer");
          continue;
        }
        if (!r.expect_object(entry, vpath)) continue;
        r.unknown_keys(entry, vpath, {"type", "vec_geo"}, Severity::kWarning);
        LaneVector v;
        v.id = *id;
        bool ok = true;
        if (const json* type = r.member(entry, "type", vpath)) {
          const std::string tpath = at(vpath, "type");
          std::optional<std::int64_t> code;
          if (type->is_string()) {
            code = parse_decimal(type->get<std::string>());
          } else if (type->is_number_integer()) {
            code = type->get<std::int64_t>();
          }
          std::optional<VectorType> vt;
          if (code && *code < kVectorTypeCount) {
            vt = vector_type_from_code(static_cast<int>(*code));
          }
          if (!vt) {
            r.error(tpath, "unknown vector type " + type->dump());
            ok = false;
          } else {
            v.type = *vt;
          }
        } else {
          ok = false;
        }
        if (const json* geo = r.member(entry, "vec_geo", vpath)) {
          auto pts = r.points(*geo, at(vpath, "vec_geo"), 2);
          ok = ok && pts.has_value();
          if (pts) v.points = std::move(*pts);
        } else {
          ok = false;
        }
        if (ok) clip.vectors.emplace(v.id, std::move(v));
      }
    }
  }

  if (const json* k = r.member(*doc, "camera_intrinsic_matrix", "")) {
    const std::string path = "/camera_intrinsic_matrix";
    if (r.expect_array(*k, path)) {
      if (k->size() != 3) {
        r.error(path, "expected a 3x3 matrix");
      } else {
        std::array<std::array<double, 3>, 3> m{};
        bool ok = true;
        for (std::size_t i = 0; i < 3; ++i) {
          auto row = r.numbers((*k)[i], at(path, i), 3);
          if (!row) {
            ok = false;
            continue;
          }
          for (std::size_t j = 0; j < 3; ++j) m[i][j] = (*row)[j];
        }
        if (ok) {
          const std::array<std::pair<std::size_t, std::size_t>, 4> zeros = {
              {{0, 1}, {1, 0}, {2, 0}, {2, 1}}};
          for (auto [i, j] : zeros) {
            if (m[i][j] != 0.0) {
              r.error(at(at(path, i), j), "expected 0 in pinhole matrix");
            }
          }
          if (m[2][2] != 1.0) r.error(at(at(path, 2), 2), "expected 1");
          if (!(m[0][0] > 0.0)) r.error(at(at(path, 0), 0), "fx must be > 0");
          if (!(m[1][1] > 0.0)) r.error(at(at(path, 1), 1), "fy must be > 0");
          clip.intrinsics = {m[0][0], m[1][1], m[0][2], m[1][2]};
        }
      }
    }
  }

  if (const json* poses = r.member(*doc, "camera_pose", "")) {
    const std::string path = "/camera_pose";
    if (r.expect_object(*poses, path)) {
      if (poses->empty()) r.error(path, "at least one camera pose is required");
      for (const auto& [ts, entry] : poses->items()) {
        const std::string ppath = at(path, ts);
        if (!all_digits(ts)) {
          r.error(ppath, "pose key must be a nanosecond timestamp");
          continue;
        }
        if (!r.expect_object(entry, ppath)) continue;
        r.unknown_keys(entry, ppath, {"tvec_enu", "rvec_enu"},
                       Severity::kWarning);
        CameraPose pose;
        pose.timestamp = ts;
        bool ok = true;
        if (const json* t = r.member(entry, "tvec_enu", ppath)) {
          auto p = r.point(*t, at(ppath, "tvec_enu"));
          ok = ok && p.has_value();
          if (p) pose.translation = *p;
        } else {
          ok = false;
        }
        if (const json* q = r.member(entry, "rvec_enu", ppath)) {
          const std::string qpath = at(ppath, "rvec_enu");
          auto c = r.numbers(*q, qpath, 4);
          if (c) {
            double norm2 = 0.0;
            for (std::size_t i = 0; i < 4; ++i) {
              pose.rotation[i] = (*c)[i];
              norm2 += (*c)[i] * (*c)[i];
            }
            if (std::abs(std::sqrt(norm2) - 1.0) > kQuaternionNormTolerance) {
              r.error(qpath, "quaternion norm deviates from 1 by more than " +
                                 std::to_string(kQuaternionNormTolerance));
              ok = false;
            }
          } else {
            ok = false;
          }
        } else {
          ok = false;
        }
        if (ok) clip.poses.emplace(ts, std::move(pose));
      }
    }
  }

  auto warnings = r.finish();
  return {std::move(clip), std::move(warnings)};
}

std::string write_clip(const ClipData& clip) {
  json doc = json::object();
  json quad = json::array();
  for (const auto& p : clip.sign_quad) quad.push_back(point_json(p));
  doc["traffic_board_pose"] = std::move(quad);

  json vectors = json::object();
  for (const auto& [id, v] : clip.vectors) {
    vectors[std::to_string(id)] = {
        {"type", std::to_string(static_cast<int>(v.type))},
        {"vec_geo", points_json(v.points)}};
  }
  doc["vector"] = std::move(vectors);

  const auto& k = clip.intrinsics;
  doc["camera_intrinsic_matrix"] = json::array(
      {json::array({k.fx, 0.0, k.cx}), json::array({0.0, k.fy, k.cy}),
       json::array({0.0, 0.0, 1.0})});

  json poses = json::object();
  for (const auto& [ts, pose] : clip.poses) {
    poses[ts] = {{"tvec_enu", point_json(pose.translation)},
                 {"rvec_enu", json::array({pose.rotation[0], pose.rotation[1],
                                           pose.rotation[2],
                                           pose.rotation[3]})}};
  }
  doc["camera_pose"] = std::move(poses);
  return dump(doc);
}

// ---------------------------------------------------------------------------
// Labels

Parsed<LabelBundle> parse_labels(std::string_view bytes, const ClipData& clip,
                                 bool strict) {
  Reader r;
  LabelBundle bundle;
  auto doc = r.parse(bytes);
  if (!doc) r.finish();
  if (!r.expect_object(*doc, "")) r.finish();

  for (const auto& [key, entry] : doc->items()) {
    const std::string path = at("", key);
    if (!r.expect_object(entry, path)) continue;
    r.unknown_keys(entry, path, {"attr_info", "centerline", "semantic_polygon"},
                   Severity::kWarning);
    LabeledRule labeled;
    labeled.key = key;
    bool ok = true;

    if (const json* attr = r.member(entry, "attr_info", path)) {
      auto rule = read_attr_info(r, *attr, at(path, "attr_info"),
                                 Severity::kWarning);
      ok = ok && rule.has_value();
      if (rule) labeled.rule = std::move(*rule);
    } else {
      ok = false;
    }

    if (const json* ids = r.member(entry, "centerline", path)) {
      const std::string cpath = at(path, "centerline");
      if (r.expect_array(*ids, cpath)) {
        for (std::size_t i = 0; i < ids->size(); ++i) {
          const json& id = (*ids)[i];
          const std::string ipath = at(cpath, i);
          if (!id.is_number_integer() || id.get<std::int64_t>() < 0) {
            r.error(ipath, "centerline id must be a non-negative integer");
            ok = false;
            continue;
          }
          const VectorId vid = id.get<VectorId>();
          if (!clip.is_centerline(vid)) {
            const std::string msg =
                "key \"centerline\" references " + std::to_string(vid) +
                (clip.vectors.contains(vid) ? ", which is not a centerline"
                                            : ", which is not in the clip");
            if (strict) {
              r.error(ipath, msg);
              ok = false;
            } else {
              r.warn(ipath, msg + "; dropped");
            }
            continue;
          }
          if (std::find(labeled.centerline_ids.begin(),
                        labeled.centerline_ids.end(),
                        vid) != labeled.centerline_ids.end()) {
            r.warn(ipath, "duplicate centerline id " + std::to_string(vid));
            continue;
          }
          labeled.centerline_ids.push_back(vid);
        }
      } else {
        ok = false;
      }
    } else {
      ok = false;
    }

    if (const json* poly = r.member(entry, "semantic_polygon", path)) {
      const std::string ppath = at(path, "semantic_polygon");
      auto pts = r.points(*poly, ppath, 3);
      if (pts && !polygon_non_degenerate(*pts)) {
        r.error(ppath, "semantic polygon needs 3 distinct points");
        pts.reset();
      }
      ok = ok && pts.has_value();
      if (pts) labeled.semantic_polygon = std::move(*pts);
    } else {
      ok = false;
    }

    if (ok) bundle.rules.push_back(std::move(labeled));
  }

  auto warnings = r.finish();
  std::sort(bundle.rules.begin(), bundle.rules.end(),
            [](const LabeledRule& a, const LabeledRule& b) {
              return RuleKeyLess{}(a.key, b.key);
            });
  bundle.graph = build_graph(bundle.rules, clip);
  return {std::move(bundle), std::move(warnings)};
}

std::string write_labels(const std::vector<LabeledRule>& rules) {
  json doc = json::object();
  for (const auto& r : rules) {
    doc[r.key] = {{"attr_info", attr_info_json(r.rule)},
                  {"centerline", r.centerline_ids},
                  {"semantic_polygon", points_json(r.semantic_polygon)}};
  }
  return dump(doc);
}

// ---------------------------------------------------------------------------
// Predictions

Parsed<PredictionSet> parse_prediction(std::string_view bytes,
                                       const ClipData* clip) {
  Reader r;
  PredictionSet pred;
  auto doc = r.parse(bytes);
  if (!doc) r.finish();
  if (!r.expect_object(*doc, "")) r.finish();
  r.unknown_keys(*doc, "", {"rules"}, Severity::kError);

  const json* rules = r.member(*doc, "rules", "");
  if (rules != nullptr && r.expect_array(*rules, "/rules")) {
    for (std::size_t pos = 0; pos < rules->size(); ++pos) {
      const json& entry = (*rules)[pos];
      const std::string path = at("/rules", pos);
      if (!r.expect_object(entry, path)) continue;
      r.unknown_keys(entry, path, {"attr_info", "confidence", "centerline"},
                     Severity::kError);
      PredictedRule predicted;
      if (const json* attr = r.member(entry, "attr_info", path)) {
        auto rule =
            read_attr_info(r, *attr, at(path, "attr_info"), Severity::kError);
        if (rule) predicted.rule = std::move(*rule);
      }
      if (const json* c = r.member(entry, "confidence", path)) {
        predicted.confidence =
            r.confidence(*c, at(path, "confidence")).value_or(0.0);
      }
      pred.rules.push_back(std::move(predicted));

      const json* edges = r.member(entry, "centerline", path);
      const std::string cpath = at(path, "centerline");
      if (edges == nullptr || !r.expect_array(*edges, cpath)) continue;
      std::set<VectorId> seen;
      for (std::size_t i = 0; i < edges->size(); ++i) {
        const json& e = (*edges)[i];
        const std::string epath = at(cpath, i);
        if (!r.expect_object(e, epath)) continue;
        r.unknown_keys(e, epath, {"id", "confidence"}, Severity::kError);
        PredictedEdge edge;
        edge.rule_position = pos;
        bool ok = true;
        if (const json* id = r.member(e, "id", epath)) {
          if (!id->is_number_integer() || id->get<std::int64_t>() < 0) {
            r.error(at(epath, "id"), "expected a non-negative integer id");
            ok = false;
          } else {
            edge.centerline = id->get<VectorId>();
            if (clip != nullptr && !clip->is_centerline(edge.centerline)) {
              r.error(at(epath, "id"),
                      "centerline " + std::to_string(edge.centerline) +
                          " is not in the clip");
              ok = false;
            }
          }
        } else {
          ok = false;
        }
        if (const json* c = r.member(e, "confidence", epath)) {
          auto conf = r.confidence(*c, at(epath, "confidence"));
          ok = ok && conf.has_value();
          if (conf) edge.confidence = *conf;
        } else {
          ok = false;
        }
        if (!ok) continue;
        if (!seen.insert(edge.centerline).second) {
          r.error(at(epath, "id"), "duplicate edge to centerline " +
                                       std::to_string(edge.centerline));
          continue;
        }
        pred.edges.push_back(edge);
      }
    }
  }

  auto warnings = r.finish();
  return {canonicalize(std::move(pred)), std::move(warnings)};
}

std::string write_prediction(const PredictionSet& pred) {
  const PredictionSet canon = canonicalize(pred);
  json rules = json::array();
  for (const auto& rule : canon.rules) {
    rules.push_back({{"attr_info", attr_info_json(rule.rule)},
                     {"confidence", rule.confidence},
                     {"centerline", json::array()}});
  }
  for (const auto& e : canon.edges) {
    if (e.rule_position >= rules.size()) {
      throw InvariantViolation("edge references missing predicted rule");
    }
    rules[e.rule_position]["centerline"].push_back(
        {{"confidence", e.confidence}, {"id", e.centerline}});
  }
  return dump(json{{"rules", std::move(rules)}});
}

std::string canonical_json(std::string_view bytes) {
  Reader r;
  auto doc = r.parse(bytes);
  r.finish();
  return dump(*doc);
}

// ---------------------------------------------------------------------------
// Directory layout

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return os.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("error while writing " + path.string());
}

bool is_clip_dir(const fs::path& dir) {
  std::error_code ec;
  return fs::is_regular_file(dir / kDataFile, ec);
}

std::vector<std::string> list_clip_ids(const fs::path& corpus) {
  std::error_code ec;
  if (!fs::is_directory(corpus, ec)) {
    throw IoError("not a directory: " + corpus.string());
  }
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(corpus)) {
    if (entry.is_directory() && is_clip_dir(entry.path())) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

ClipData load_clip_data(const fs::path& dir) {
  const std::string bytes = read_file(dir / kDataFile);
  Parsed<ClipData> parsed = [&] {
    try {
      return parse_clip(bytes);
    } catch (DatasetError& e) {
      auto issues = e.issues();
      prefix_issues(issues, kDataFile);
      throw DatasetError(std::move(issues));
    }
  }();
  parsed.value.frames = scan_frames(dir);
  return std::move(parsed.value);
}

ClipBundle load_clip_dir(const fs::path& dir, bool strict) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("not a directory: " + dir.string());
  }
  ClipBundle bundle;
  bundle.clip_id = dir.filename().string();
  if (bundle.clip_id.empty()) bundle.clip_id = dir.parent_path().filename();

  const std::string data_bytes = read_file(dir / kDataFile);
  const std::string label_bytes = read_file(dir / kLabelFile);
  try {
    auto clip = parse_clip(data_bytes);
    bundle.clip = std::move(clip.value);
    prefix_issues(clip.warnings, kDataFile);
    bundle.warnings = std::move(clip.warnings);
  } catch (DatasetError& e) {
    auto issues = e.issues();
    prefix_issues(issues, kDataFile);
    throw DatasetError(std::move(issues));
  }
  try {
    auto labels = parse_labels(label_bytes, bundle.clip, strict);
    bundle.labels = std::move(labels.value);
    prefix_issues(labels.warnings, kLabelFile);
    bundle.warnings.insert(bundle.warnings.end(), labels.warnings.begin(),
                           labels.warnings.end());
  } catch (DatasetError& e) {
    auto issues = e.issues();
    prefix_issues(issues, kLabelFile);
    throw DatasetError(std::move(issues));
  }

  bundle.clip.frames = scan_frames(dir);
  for (const auto& f : bundle.clip.frames) {
    if (!bundle.clip.poses.contains(f.timestamp)) {
      bundle.warnings.push_back({Severity::kWarning, f.image_path,
                                 "frame has no matching camera pose"});
    }
  }
  return bundle;
}

void write_clip_dir(const fs::path& dir, const ClipData& clip,
                    const std::vector<LabeledRule>& rules) {
  fs::create_directories(dir);
  write_file(dir / kDataFile, write_clip(clip));
  write_file(dir / kLabelFile, write_labels(rules));
}

std::vector<ValidationIssue> validate_clip_dir(const fs::path& dir,
                                               bool strict) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::vector<ValidationIssue> issues;
  auto absorb = [&](std::vector<ValidationIssue> more, std::string_view file) {
    prefix_issues(more, file);
    issues.insert(issues.end(), more.begin(), more.end());
  };

  const std::string data_bytes = read_file(dir / kDataFile);
  std::optional<ClipData> clip;
  try {
    auto parsed = parse_clip(data_bytes);
    clip = std::move(parsed.value);
    absorb(std::move(parsed.warnings), kDataFile);
  } catch (const DatasetError& e) {
    absorb(e.issues(), kDataFile);
  }

  const std::string label_bytes = read_file(dir / kLabelFile);
  if (clip) {
    try {
      absorb(parse_labels(label_bytes, *clip, strict).warnings, kLabelFile);
    } catch (const DatasetError& e) {
      absorb(e.issues(), kLabelFile);
    }
  } else {
    issues.push_back({Severity::kWarning, prefix_path(kLabelFile, ""),
                      "not checked because data.json is invalid"});
  }

  if (fs::is_regular_file(dir / kPredictionFile, ec)) {
    const std::string pred_bytes = read_file(dir / kPredictionFile);
    try {
      absorb(parse_prediction(pred_bytes, clip ? &*clip : nullptr).warnings,
             kPredictionFile);
    } catch (const DatasetError& e) {
      absorb(e.issues(), kPredictionFile);
    }
  }
  return issues;
}

}  // namespace mapdr
