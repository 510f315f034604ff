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

// Non-learned reference predictor. Rules are attached to lanes by reading
// RuleIndex as a 1-based position in the left-to-right lane order, which is
// how one-column-per-lane signs are laid out. Similarity clustering groups
// sign elements (symbol/text embeddings, or detection polygons by overlap)
// into rule groups.

#ifndef MAPDR_BASELINE_GEO_HPP_
#define MAPDR_BASELINE_GEO_HPP_

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "mapdr/core_model.hpp"

namespace mapdr {

/// Midpoint between the contrastive training margins; configurable.
inline constexpr double kDefaultClusterThreshold = 0.5;

/// Dense symmetric similarity matrix with unit diagonal and entries in
/// [-1, 1]. Construction validates; symmetry tolerance is 1e-9.
class SimilarityMatrix {
 public:
  SimilarityMatrix(std::size_t n, std::vector<double> values);

  static SimilarityMatrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    return values_[i * n_ + j];
  }

 private:
  std::size_t n_;
  std::vector<double> values_;
};

/// Cosine similarity between row vectors. Zero rows are similar only to
/// themselves.
SimilarityMatrix cosine_similarity(const std::vector<std::vector<double>>& rows);

/// Intersection over union of the polygons' bounding rectangles, measured in
/// the two axes along which the pair spreads the most (so both pixel and
/// on-sign 3D polygons work).
SimilarityMatrix overlap_similarity(const std::vector<OcrObservation>& obs);

/// Connected components of {sim >= threshold}. Members ascend within a
/// cluster; clusters are ordered by their smallest member.
std::vector<std::vector<std::size_t>> cluster_by_similarity(
    const SimilarityMatrix& sim, double threshold = kDefaultClusterThreshold);

/// Groups detections by polygon overlap.
std::vector<std::vector<std::size_t>> group_observations(
    const std::vector<OcrObservation>& obs,
    double threshold = kDefaultClusterThreshold);

/// 1-based lane position named by a RuleIndex, if it is a positive decimal.
std::optional<std::size_t> parse_rule_index(std::string_view rule_index);

/// Copies the rules with confidence 1 and links rule i to the i-th
/// centerline from the left with confidence 1. Unparsable or out-of-range
/// indices produce no edge. Throws InvariantViolation when the clip has no
/// centerline.
PredictionSet infer_correspondence(const std::vector<Rule>& rules,
                                   const ClipData& clip);
PredictionSet infer_correspondence(const std::vector<LabeledRule>& rules,
                                   const ClipData& clip);

}  // namespace mapdr

#endif  // MAPDR_BASELINE_GEO_HPP_
