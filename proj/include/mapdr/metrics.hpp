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

// Benchmark metrics: rule extraction P/R, rule-lane correspondence P/R, the
// overall subgraph P/R swept over association-confidence thresholds, and the
// area under that precision-recall curve.
//
// Counting conventions used throughout:
//  * precision = hits / predicted, recall = hits / ground truth;
//  * both sides empty gives 1, an empty denominator alone gives 0;
//  * dataset numbers are micro-averaged: counts are pooled before dividing.

#ifndef MAPDR_METRICS_HPP_
#define MAPDR_METRICS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mapdr/core_model.hpp"

namespace mapdr {

inline constexpr std::size_t kDefaultThresholdCount = 100;

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// hits / predicted with the empty-set conventions above.
double safe_precision(std::size_t hits, std::size_t predicted,
                      std::size_t ground_truth);
double safe_recall(std::size_t hits, std::size_t predicted,
                   std::size_t ground_truth);

struct RuleMatching {
  std::vector<std::pair<std::string, std::size_t>> pairs;  // (gt key, pred pos)
  std::vector<std::string> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;

  /// Ground-truth key matched to a predicted position, if any.
  std::optional<std::string> gt_key_of(std::size_t pred_position) const;
};

/// Maximum one-to-one matching under rules_equal. Ground-truth rules are
/// visited in key order and each takes the first equal unmatched prediction
/// in canonical order, so the result does not depend on the order of rules
/// in the prediction file.
RuleMatching match_rules(const std::vector<LabeledRule>& gt,
                         const PredictionSet& pred);
RuleMatching match_rules(const std::vector<LabeledRule>& gt,
                         const std::vector<PredictedRule>& pred);

PrecisionRecall rule_extraction_pr(const RuleMatching& matching);

/// A predicted edge re-expressed on the ground-truth rule side. Edges of
/// predicted rules with no ground-truth counterpart carry no key.
struct KeyedEdge {
  std::optional<std::string> rule_key;
  VectorId centerline = 0;
};

/// Maps every predicted rule onto a ground-truth key for correspondence
/// scoring: exact matches first, then unmatched predictions take the
/// unmatched ground-truth rule with the same normalized rule index.
std::vector<std::optional<std::string>> align_rules(
    const std::vector<LabeledRule>& gt, const PredictionSet& pred,
    const RuleMatching& matching);

std::vector<KeyedEdge> keyed_edges(
    const PredictionSet& pred,
    const std::vector<std::optional<std::string>>& alignment);

/// Throws InvariantViolation when a keyed edge names an unknown rule or
/// centerline.
PrecisionRecall correspondence_pr(const CorrespondenceGraph& gt_graph,
                                  std::span<const KeyedEdge> pred_edges);

/// Predicted edge with its overall-task verdict: the rule is exactly right
/// and the ground truth links that rule to the same centerline.
struct ScoredEdge {
  double confidence = 0.0;
  bool hit = false;
};

std::vector<ScoredEdge> score_subgraphs(const CorrespondenceGraph& gt_graph,
                                        const PredictionSet& pred,
                                        const RuleMatching& matching);

PrecisionRecall overall_pr(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred, double threshold);

/// `count` thresholds evenly spaced over [0, 1], both ends included.
std::vector<double> threshold_grid(std::size_t count = kDefaultThresholdCount);

struct CurvePoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Trapezoidal area under the curve in recall order. Duplicate recalls keep
/// their best precision; when recall 0 is absent the curve is anchored at
/// (0, precision of the last point in threshold order).
double area_under_pr(std::span<const CurvePoint> curve);

struct ApResult {
  double ap = 0.0;
  std::vector<CurvePoint> curve;
};

ApResult average_precision(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred,
                           std::size_t threshold_count = kDefaultThresholdCount);

// ---------------------------------------------------------------------------
// Per-clip counts and reports

struct MetricCounts {
  std::size_t gt_rules = 0;
  std::size_t pred_rules = 0;
  std::size_t rule_matches = 0;
  std::size_t gt_edges = 0;
  std::size_t pred_edges = 0;
  std::size_t edge_hits = 0;
  std::size_t gt_subgraphs = 0;
  std::size_t pred_subgraphs = 0;  // every emitted edge, ungated
  std::size_t subgraph_hits = 0;
  std::vector<std::size_t> curve_pred;  // per threshold
  std::vector<std::size_t> curve_hits;

  friend bool operator==(const MetricCounts&, const MetricCounts&) = default;
};

struct ClipInput {
  const std::vector<LabeledRule>* gt_rules = nullptr;
  const CorrespondenceGraph* gt_graph = nullptr;
  const PredictionSet* pred = nullptr;
};

MetricCounts count_clip(const std::vector<LabeledRule>& gt_rules,
                        const CorrespondenceGraph& gt_graph,
                        const PredictionSet& pred,
                        std::span<const double> thresholds);

/// Sums counts; all inputs must share the threshold grid.
MetricCounts pool_counts(std::span<const MetricCounts> clips);

struct MetricReport {
  MetricCounts counts;
  double p_re = 0.0;
  double r_re = 0.0;
  double p_cr = 0.0;
  double r_cr = 0.0;
  double p_all = 0.0;  // every emitted edge counts
  double r_all = 0.0;
  std::vector<CurvePoint> curve;
  double ap = 0.0;
};

MetricReport make_report(MetricCounts counts,
                         std::span<const double> thresholds);

MetricReport evaluate_clip(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred,
                           std::size_t threshold_count = kDefaultThresholdCount);

/// Micro-averaged report over clips; AP comes from pooled curve counts.
MetricReport aggregate(std::span<const MetricReport> reports,
                       std::span<const double> thresholds);

// ---------------------------------------------------------------------------
// Corpus kernels. The serial version is the reference the OpenMP version is
// tested against; both return counts in input order.

std::vector<MetricCounts> count_corpus_serial(
    std::span<const ClipInput> clips, std::span<const double> thresholds);

/// `threads` <= 0 uses the OpenMP default.
std::vector<MetricCounts> count_corpus_parallel(
    std::span<const ClipInput> clips, std::span<const double> thresholds,
    int threads = 0);

// ---------------------------------------------------------------------------
// Report serialization

/// {counts, p_re, r_re, p_cr, r_cr, p_all, r_all, curve: [{t, p, r}], ap}
std::string report_to_json(const MetricReport& report, int indent = 2);

}  // namespace mapdr

#endif  // MAPDR_METRICS_HPP_
