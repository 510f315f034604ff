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

#include "mapdr/metrics.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <tuple>

#include "json.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mapdr {
namespace {

// Sort key that makes the matching independent of prediction order: two
// predicted rules that tie on it are indistinguishable to every metric.
struct CanonicalKey {
  Rule rule;
  double neg_confidence = 0.0;
  std::vector<std::pair<VectorId, double>> edges;  // (id, -confidence)

  friend auto operator<=>(const CanonicalKey&, const CanonicalKey&) = default;
};

std::vector<std::size_t> canonical_order(const PredictionSet& pred) {
  std::vector<CanonicalKey> keys(pred.rules.size());
  for (std::size_t i = 0; i < pred.rules.size(); ++i) {
    keys[i].rule = normalize_rule(pred.rules[i].rule);
    keys[i].neg_confidence = -pred.rules[i].confidence;
  }
  for (const auto& e : pred.edges) {
    if (e.rule_position < keys.size()) {
      keys[e.rule_position].edges.emplace_back(e.centerline, -e.confidence);
    }
  }
  for (auto& k : keys) std::sort(k.edges.begin(), k.edges.end());

  std::vector<std::size_t> order(pred.rules.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

std::vector<const LabeledRule*> gt_in_key_order(
    const std::vector<LabeledRule>& gt) {
  std::vector<const LabeledRule*> out;
  out.reserve(gt.size());
  for (const auto& r : gt) out.push_back(&r);
  std::stable_sort(out.begin(), out.end(),
                   [](const LabeledRule* a, const LabeledRule* b) {
                     return RuleKeyLess{}(a->key, b->key);
                   });
  return out;
}

std::vector<std::optional<std::string>> matched_keys(
    const RuleMatching& matching, std::size_t pred_count) {
  std::vector<std::optional<std::string>> keys(pred_count);
  for (const auto& [key, pos] : matching.pairs) {
    if (pos < pred_count) keys[pos] = key;
  }
  return keys;
}

}  // namespace

double safe_precision(std::size_t hits, std::size_t predicted,
                      std::size_t ground_truth) {
  if (predicted == 0) return ground_truth == 0 ? 1.0 : 0.0;
  return static_cast<double>(hits) / static_cast<double>(predicted);
}

double safe_recall(std::size_t hits, std::size_t predicted,
                   std::size_t ground_truth) {
  if (ground_truth == 0) return predicted == 0 ? 1.0 : 0.0;
  return static_cast<double>(hits) / static_cast<double>(ground_truth);
}

std::optional<std::string> RuleMatching::gt_key_of(
    std::size_t pred_position) const {
  for (const auto& [key, pos] : pairs) {
    if (pos == pred_position) return key;
  }
  return std::nullopt;
}

RuleMatching match_rules(const std::vector<LabeledRule>& gt,
                         const PredictionSet& pred) {
  const auto order = canonical_order(pred);
  std::vector<Rule> normalized(pred.rules.size());
  for (std::size_t i = 0; i < pred.rules.size(); ++i) {
    normalized[i] = normalize_rule(pred.rules[i].rule);
  }
  std::vector<bool> taken(pred.rules.size(), false);

  RuleMatching out;
  for (const LabeledRule* g : gt_in_key_order(gt)) {
    const Rule target = normalize_rule(g->rule);
    bool matched = false;
    for (std::size_t pos : order) {
      if (!taken[pos] && normalized[pos] == target) {
        taken[pos] = true;
        out.pairs.emplace_back(g->key, pos);
        matched = true;
        break;
      }
    }
    if (!matched) out.unmatched_gt.push_back(g->key);
  }
  for (std::size_t pos = 0; pos < taken.size(); ++pos) {
    if (!taken[pos]) out.unmatched_pred.push_back(pos);
  }
  return out;
}

RuleMatching match_rules(const std::vector<LabeledRule>& gt,
                         const std::vector<PredictedRule>& pred) {
  PredictionSet set;
  set.rules = pred;
  return match_rules(gt, set);
}

PrecisionRecall rule_extraction_pr(const RuleMatching& matching) {
  const std::size_t hits = matching.pairs.size();
  const std::size_t predicted = hits + matching.unmatched_pred.size();
  const std::size_t truth = hits + matching.unmatched_gt.size();
  return {safe_precision(hits, predicted, truth),
          safe_recall(hits, predicted, truth)};
}

std::vector<std::optional<std::string>> align_rules(
    const std::vector<LabeledRule>& gt, const PredictionSet& pred,
    const RuleMatching& matching) {
  auto alignment = matched_keys(matching, pred.rules.size());
  std::set<std::string, std::less<>> used;
  for (const auto& [key, pos] : matching.pairs) used.insert(key);

  const auto gt_sorted = gt_in_key_order(gt);
  for (std::size_t pos : canonical_order(pred)) {
    if (alignment[pos]) continue;
    const std::string index = collapse_whitespace(pred.rules[pos].rule.rule_index);
    for (const LabeledRule* g : gt_sorted) {
      if (used.contains(g->key)) continue;
      if (collapse_whitespace(g->rule.rule_index) == index) {
        alignment[pos] = g->key;
        used.insert(g->key);
        break;
      }
    }
  }
  return alignment;
}

std::vector<KeyedEdge> keyed_edges(
    const PredictionSet& pred,
    const std::vector<std::optional<std::string>>& alignment) {
  std::vector<KeyedEdge> out;
  out.reserve(pred.edges.size());
  for (const auto& e : pred.edges) {
    KeyedEdge k;
    if (e.rule_position < alignment.size()) k.rule_key = alignment[e.rule_position];
    k.centerline = e.centerline;
    out.push_back(std::move(k));
  }
  return out;
}

namespace {

std::size_t correspondence_hits(const CorrespondenceGraph& gt_graph,
                                std::span<const KeyedEdge> pred_edges) {
  std::set<Edge> hits;
  for (const auto& e : pred_edges) {
    if (e.rule_key && !gt_graph.has_rule(*e.rule_key)) {
      throw InvariantViolation("predicted edge names unknown rule '" +
                               *e.rule_key + "'");
    }
    if (!gt_graph.has_centerline(e.centerline)) {
      throw InvariantViolation("predicted edge names unknown centerline " +
                               std::to_string(e.centerline));
    }
    if (!e.rule_key) continue;
    Edge edge{*e.rule_key, e.centerline};
    if (gt_graph.contains(edge)) hits.insert(std::move(edge));
  }
  return hits.size();
}

}  // namespace

PrecisionRecall correspondence_pr(const CorrespondenceGraph& gt_graph,
                                  std::span<const KeyedEdge> pred_edges) {
  const std::size_t hits = correspondence_hits(gt_graph, pred_edges);
  return {safe_precision(hits, pred_edges.size(), gt_graph.edge_count()),
          safe_recall(hits, pred_edges.size(), gt_graph.edge_count())};
}

std::vector<ScoredEdge> score_subgraphs(const CorrespondenceGraph& gt_graph,
                                        const PredictionSet& pred,
                                        const RuleMatching& matching) {
  const auto keys = matched_keys(matching, pred.rules.size());
  std::vector<ScoredEdge> out;
  out.reserve(pred.edges.size());
  for (const auto& e : pred.edges) {
    bool hit = false;
    if (e.rule_position < keys.size() && keys[e.rule_position]) {
      hit = gt_graph.contains(Edge{*keys[e.rule_position], e.centerline});
    }
    out.push_back({e.confidence, hit});
  }
  return out;
}

PrecisionRecall overall_pr(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred, double threshold) {
  const auto matching = match_rules(gt_rules, pred);
  std::size_t predicted = 0;
  std::size_t hits = 0;
  for (const auto& s : score_subgraphs(gt_graph, pred, matching)) {
    if (s.confidence < threshold) continue;
    ++predicted;
    if (s.hit) ++hits;
  }
  const std::size_t truth = gt_graph.edge_count();
  return {safe_precision(hits, predicted, truth),
          safe_recall(hits, predicted, truth)};
}

std::vector<double> threshold_grid(std::size_t count) {
  if (count < 2) throw std::invalid_argument("threshold count must be >= 2");
  std::vector<double> grid(count);
  const double last = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    grid[i] = static_cast<double>(i) / last;
  }
  return grid;
}

double area_under_pr(std::span<const CurvePoint> curve) {
  if (curve.empty()) return 0.0;
  std::vector<std::pair<double, double>> pts;  // (recall, precision)
  pts.reserve(curve.size() + 1);
  for (const auto& c : curve) pts.emplace_back(c.recall, c.precision);
  std::sort(pts.begin(), pts.end());

  // Sorted ascending, so the last entry of each recall run holds the max.
  std::vector<std::pair<double, double>> dedup;
  for (const auto& p : pts) {
    if (!dedup.empty() && dedup.back().first == p.first) {
      dedup.back().second = p.second;
    } else {
      dedup.push_back(p);
    }
  }
  if (dedup.front().first != 0.0) {
    dedup.insert(dedup.begin(), {0.0, curve.back().precision});
  }
  double area = 0.0;
  for (std::size_t i = 1; i < dedup.size(); ++i) {
    area += (dedup[i].first - dedup[i - 1].first) *
            (dedup[i].second + dedup[i - 1].second) / 2.0;
  }
  return area;
}

MetricCounts count_clip(const std::vector<LabeledRule>& gt_rules,
                        const CorrespondenceGraph& gt_graph,
                        const PredictionSet& pred,
                        std::span<const double> thresholds) {
  const auto matching = match_rules(gt_rules, pred);
  const auto keyed = keyed_edges(pred, align_rules(gt_rules, pred, matching));
  const auto scored = score_subgraphs(gt_graph, pred, matching);

  MetricCounts c;
  c.gt_rules = gt_rules.size();
  c.pred_rules = pred.rules.size();
  c.rule_matches = matching.pairs.size();
  c.gt_edges = gt_graph.edge_count();
  c.pred_edges = keyed.size();
  c.edge_hits = correspondence_hits(gt_graph, keyed);
  c.gt_subgraphs = gt_graph.edge_count();
  c.pred_subgraphs = scored.size();
  c.subgraph_hits = static_cast<std::size_t>(
      std::count_if(scored.begin(), scored.end(),
                    [](const ScoredEdge& s) { return s.hit; }));
  c.curve_pred.assign(thresholds.size(), 0);
  c.curve_hits.assign(thresholds.size(), 0);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    for (const auto& s : scored) {
      if (s.confidence < thresholds[t]) continue;
      ++c.curve_pred[t];
      if (s.hit) ++c.curve_hits[t];
    }
  }
  return c;
}

MetricCounts pool_counts(std::span<const MetricCounts> clips) {
  MetricCounts total;
  if (clips.empty()) return total;
  total.curve_pred.assign(clips.front().curve_pred.size(), 0);
  total.curve_hits.assign(clips.front().curve_hits.size(), 0);
  for (const auto& c : clips) {
    if (c.curve_pred.size() != total.curve_pred.size() ||
        c.curve_hits.size() != total.curve_hits.size()) {
      throw std::invalid_argument("clip counts use different threshold grids");
    }
    total.gt_rules += c.gt_rules;
    total.pred_rules += c.pred_rules;
    total.rule_matches += c.rule_matches;
    total.gt_edges += c.gt_edges;
    total.pred_edges += c.pred_edges;
    total.edge_hits += c.edge_hits;
    total.gt_subgraphs += c.gt_subgraphs;
    total.pred_subgraphs += c.pred_subgraphs;
    total.subgraph_hits += c.subgraph_hits;
    for (std::size_t t = 0; t < c.curve_pred.size(); ++t) {
      total.curve_pred[t] += c.curve_pred[t];
      total.curve_hits[t] += c.curve_hits[t];
    }
  }
  return total;
}

MetricReport make_report(MetricCounts counts,
                         std::span<const double> thresholds) {
  if (counts.curve_pred.size() != thresholds.size() ||
      counts.curve_hits.size() != thresholds.size()) {
    throw std::invalid_argument("counts do not match the threshold grid");
  }
  MetricReport r;
  const auto& c = counts;
  r.p_re = safe_precision(c.rule_matches, c.pred_rules, c.gt_rules);
  r.r_re = safe_recall(c.rule_matches, c.pred_rules, c.gt_rules);
  r.p_cr = safe_precision(c.edge_hits, c.pred_edges, c.gt_edges);
  r.r_cr = safe_recall(c.edge_hits, c.pred_edges, c.gt_edges);
  r.p_all = safe_precision(c.subgraph_hits, c.pred_subgraphs, c.gt_subgraphs);
  r.r_all = safe_recall(c.subgraph_hits, c.pred_subgraphs, c.gt_subgraphs);
  r.curve.reserve(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    r.curve.push_back(
        {thresholds[t],
         safe_precision(c.curve_hits[t], c.curve_pred[t], c.gt_subgraphs),
         safe_recall(c.curve_hits[t], c.curve_pred[t], c.gt_subgraphs)});
  }
  r.ap = area_under_pr(r.curve);
  r.counts = std::move(counts);
  return r;
}

ApResult average_precision(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred,
                           std::size_t threshold_count) {
  const auto grid = threshold_grid(threshold_count);
  auto report = make_report(count_clip(gt_rules, gt_graph, pred, grid), grid);
  return {report.ap, std::move(report.curve)};
}

MetricReport evaluate_clip(const std::vector<LabeledRule>& gt_rules,
                           const CorrespondenceGraph& gt_graph,
                           const PredictionSet& pred,
                           std::size_t threshold_count) {
  const auto grid = threshold_grid(threshold_count);
  return make_report(count_clip(gt_rules, gt_graph, pred, grid), grid);
}

MetricReport aggregate(std::span<const MetricReport> reports,
                       std::span<const double> thresholds) {
  if (reports.empty()) {
    throw std::invalid_argument("aggregate needs at least one report");
  }
  std::vector<MetricCounts> counts;
  counts.reserve(reports.size());
  for (const auto& r : reports) counts.push_back(r.counts);
  return make_report(pool_counts(counts), thresholds);
}

std::vector<MetricCounts> count_corpus_serial(
    std::span<const ClipInput> clips, std::span<const double> thresholds) {
  std::vector<MetricCounts> out;
  out.reserve(clips.size());
  for (const auto& c : clips) {
    out.push_back(count_clip(*c.gt_rules, *c.gt_graph, *c.pred, thresholds));
  }
  return out;
}

std::vector<MetricCounts> count_corpus_parallel(
    std::span<const ClipInput> clips, std::span<const double> thresholds,
    int threads) {
  std::vector<MetricCounts> out(clips.size());
  std::vector<std::exception_ptr> errors(clips.size());
  const auto n = static_cast<std::ptrdiff_t>(clips.size());
#ifdef _OPENMP
  const int team = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(team)
#endif
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& c = clips[static_cast<std::size_t>(i)];
    try {
      out[static_cast<std::size_t>(i)] =
          count_clip(*c.gt_rules, *c.gt_graph, *c.pred, thresholds);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  (void)threads;
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string report_to_json(const MetricReport& report, int indent) {
  using nlohmann::json;
  const auto& c = report.counts;
  json curve = json::array();
  for (const auto& p : report.curve) {
    curve.push_back({{"t", p.threshold}, {"p", p.precision}, {"r", p.recall}});
  }
  json doc = {
      {"counts",
       {{"gt_rules", c.gt_rules},
        {"pred_rules", c.pred_rules},
        {"rule_matches", c.rule_matches},
        {"gt_edges", c.gt_edges},
        {"pred_edges", c.pred_edges},
        {"edge_hits", c.edge_hits},
        {"gt_subgraphs", c.gt_subgraphs},
        {"pred_subgraphs", c.pred_subgraphs},
        {"subgraph_hits", c.subgraph_hits},
        {"curve_pred", c.curve_pred},
        {"curve_hits", c.curve_hits}}},
      {"p_re", report.p_re},
      {"r_re", report.r_re},
      {"p_cr", report.p_cr},
      {"r_cr", report.r_cr},
      {"p_all", report.p_all},
      {"r_all", report.r_all},
      {"curve", std::move(curve)},
      {"ap", report.ap}};
  return doc.dump(indent) + "\n";
}

}  // namespace mapdr
