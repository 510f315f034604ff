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

// Test-only oracles. Nothing here calls into the metric engine: the AP
// oracle re-derives every curve point by direct enumeration of thresholds
// over labelled edges.

#ifndef MAPDR_TESTS_ORACLES_ORACLES_HPP_
#define MAPDR_TESTS_ORACLES_ORACLES_HPP_

#include <cstddef>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mapdr/core_model.hpp"

namespace mapdr::oracle {

struct LabelledEdge {
  double confidence;
  bool hit;
};

inline double ratio_or_convention(std::size_t num, std::size_t den,
                                  std::size_t other) {
  if (den == 0) return other == 0 ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

/// Exhaustive threshold enumeration: for each of `grid` evenly spaced
/// thresholds count the kept edges and hits, then integrate precision over
/// recall with the trapezoid rule.
inline double brute_force_ap(const std::vector<LabelledEdge>& edges,
                             std::size_t gt_count, std::size_t grid = 100) {
  std::map<double, double> best;  // recall -> max precision
  double last_precision = 0.0;
  for (std::size_t i = 0; i < grid; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(grid - 1);
    std::size_t kept = 0, hits = 0;
    for (const auto& e : edges) {
      if (e.confidence >= t) {
        ++kept;
        hits += e.hit ? 1 : 0;
      }
    }
    const double p = ratio_or_convention(hits, kept, gt_count);
    const double r = ratio_or_convention(hits, gt_count, kept);
    auto [it, inserted] = best.emplace(r, p);
    if (!inserted && p > it->second) it->second = p;
    last_precision = p;
  }
  best.emplace(0.0, last_precision);  // only lands when recall 0 is absent
  double area = 0.0;
  auto prev = best.begin();
  for (auto it = std::next(best.begin()); it != best.end(); ++it, ++prev) {
    area += (it->first - prev->first) * (it->second + prev->second) / 2.0;
  }
  return area;
}

/// Random valid rule; text properties get random surrounding and internal
/// whitespace noise when `noisy` is set.
inline Rule random_rule(std::mt19937_64& rng, bool noisy) {
  auto draw = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  auto noise = [&](std::string s) {
    if (!noisy) return s;
    static const std::vector<std::string> pads = {"", " ", "  ", "\t", " \n"};
    std::string out = pads[static_cast<std::size_t>(draw(5))];
    for (char c : s) {
      out.push_back(c);
      if (c == ' ' && draw(2) == 0) out += "  ";
    }
    return out + pads[static_cast<std::size_t>(draw(5))];
  };
  static const std::vector<std::string> times = {"None", "7:00-9:00",
                                                 "7:00 - 9:00", "17:00-19:00"};
  static const std::vector<std::string> speeds = {"None", "40", "60", "100", "120"};
  Rule r;
  r.lane_type = static_cast<LaneType>(draw(kLaneTypeCount));
  r.rule_index = noise(std::to_string(draw(6)));
  if (draw(3) == 0) {
    r.lane_direction = DirectionSet{LaneDirection::kNone};
  } else {
    DirectionSet s;
    while (s.empty()) {
      for (int d = 1; d < kLaneDirectionCount; ++d) {
        if (draw(3) == 0) s.insert(static_cast<LaneDirection>(d));
      }
    }
    r.lane_direction = s;
  }
  r.allowed_transport = static_cast<Transport>(draw(kTransportCount));
  r.effective_date = static_cast<EffectiveDate>(draw(kEffectiveDateCount));
  r.effective_time = noise(times[static_cast<std::size_t>(draw(4))]);
  r.low_speed_limit = noise(speeds[static_cast<std::size_t>(draw(5))]);
  r.high_speed_limit = noise(speeds[static_cast<std::size_t>(draw(5))]);
  return r;
}

}  // namespace mapdr::oracle

#endif  // MAPDR_TESTS_ORACLES_ORACLES_HPP_
