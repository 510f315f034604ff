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

#include "mapdr/baseline_geo.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mapdr/geometry.hpp"

namespace mapdr {

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n_ * n_) {
    throw InvariantViolation("similarity matrix has the wrong size");
  }
  for (std::size_t i = 0; i < n_; ++i) {
    if (std::abs((*this)(i, i) - 1.0) > 1e-9) {
      throw InvariantViolation("similarity diagonal must be 1");
    }
    for (std::size_t j = 0; j < n_; ++j) {
      const double v = (*this)(i, j);
      if (!(v >= -1.0 - 1e-9 && v <= 1.0 + 1e-9)) {
        throw InvariantViolation("similarity outside [-1, 1]");
      }
      if (std::abs(v - (*this)(j, i)) > 1e-9) {
        throw InvariantViolation("similarity matrix is not symmetric");
      }
    }
  }
}

SimilarityMatrix SimilarityMatrix::identity(std::size_t n) {
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  return SimilarityMatrix(n, std::move(v));
}

SimilarityMatrix cosine_similarity(
    const std::vector<std::vector<double>>& rows) {
  const std::size_t n = rows.size();
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i].size() != rows.front().size()) {
      throw std::invalid_argument("embedding rows differ in length");
    }
    norms[i] = std::sqrt(std::inner_product(rows[i].begin(), rows[i].end(),
                                            rows[i].begin(), 0.0));
  }
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    v[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0.0;
      if (norms[i] > 0.0 && norms[j] > 0.0) {
        s = std::inner_product(rows[i].begin(), rows[i].end(), rows[j].begin(),
                               0.0) /
            (norms[i] * norms[j]);
        s = std::clamp(s, -1.0, 1.0);
      }
      v[i * n + j] = v[j * n + i] = s;
    }
  }
  return SimilarityMatrix(n, std::move(v));
}

namespace {

struct Box {
  std::array<double, 3> lo{};
  std::array<double, 3> hi{};
};

Box bounds(const std::vector<Point3>& pts) {
  Box b;
  b.lo = {pts.front().x, pts.front().y, pts.front().z};
  b.hi = b.lo;
  for (const auto& p : pts) {
    const std::array<double, 3> c{p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], c[a]);
      b.hi[a] = std::max(b.hi[a], c[a]);
    }
  }
  return b;
}

double box_iou(const Box& a, const Box& b) {
  // Drop the axis with the smallest joint extent.
  std::array<double, 3> extent{};
  for (int i = 0; i < 3; ++i) {
    extent[i] = std::max(a.hi[i], b.hi[i]) - std::min(a.lo[i], b.lo[i]);
  }
  const int drop = static_cast<int>(
      std::min_element(extent.begin(), extent.end()) - extent.begin());
  double inter = 1.0, area_a = 1.0, area_b = 1.0;
  for (int i = 0; i < 3; ++i) {
    if (i == drop) continue;
    inter *= std::max(0.0, std::min(a.hi[i], b.hi[i]) - std::max(a.lo[i], b.lo[i]));
    area_a *= a.hi[i] - a.lo[i];
    area_b *= b.hi[i] - b.lo[i];
  }
  const double uni = area_a + area_b - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) i = parent_[i] = parent_[parent_[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a), b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;  // root stays the smallest member
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace

SimilarityMatrix overlap_similarity(const std::vector<OcrObservation>& obs) {
  std::vector<Box> boxes;
  for (const auto& o : obs) {
    validate(o);
    boxes.push_back(bounds(o.polygon));
  }
  const std::size_t n = obs.size();
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    v[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      v[i * n + j] = v[j * n + i] = box_iou(boxes[i], boxes[j]);
    }
  }
  return SimilarityMatrix(n, std::move(v));
}

std::vector<std::vector<std::size_t>> cluster_by_similarity(
    const SimilarityMatrix& sim, double threshold) {
  if (!(threshold > -1.0 && threshold < 1.0)) {
    throw std::invalid_argument("cluster threshold must lie in (-1, 1)");
  }
  const std::size_t n = sim.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (sim(i, j) >= threshold) sets.unite(i, j);
    }
  }
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t root = sets.find(i);
    if (slot[root] == n) {
      slot[root] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[root]].push_back(i);
  }
  return clusters;
}

std::vector<std::vector<std::size_t>> group_observations(
    const std::vector<OcrObservation>& obs, double threshold) {
  return cluster_by_similarity(overlap_similarity(obs), threshold);
}

std::optional<std::size_t> parse_rule_index(std::string_view rule_index) {
  const std::string text = collapse_whitespace(rule_index);
  std::size_t value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || value == 0) {
    return std::nullopt;
  }
  return value;
}

PredictionSet infer_correspondence(const std::vector<Rule>& rules,
                                   const ClipData& clip) {
  if (clip.centerline_ids().empty()) {
    throw InvariantViolation("clip has no centerlines");
  }
  const auto order = lateral_order(clip);
  PredictionSet pred;
  for (std::size_t pos = 0; pos < rules.size(); ++pos) {
    pred.rules.push_back({rules[pos], 1.0});
    const auto index = parse_rule_index(rules[pos].rule_index);
    if (index && *index <= order.size()) {
      pred.edges.push_back({pos, order[*index - 1], 1.0});
    }
  }
  return canonicalize(std::move(pred));
}

PredictionSet infer_correspondence(const std::vector<LabeledRule>& rules,
                                   const ClipData& clip) {
  std::vector<Rule> plain;
  plain.reserve(rules.size());
  for (const auto& r : rules) plain.push_back(r.rule);
  return infer_correspondence(plain, clip);
}

}  // namespace mapdr
