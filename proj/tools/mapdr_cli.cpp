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

// mapdr: batch front end for validation, evaluation, overlays, synthetic
// corpora and the geometric baseline.
//
// Exit codes: 0 success, 1 validation or metric-domain failure, 2 I/O or
// usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mapdr/baseline_geo.hpp"
#include "mapdr/dataset_io.hpp"
#include "mapdr/geometry.hpp"
#include "mapdr/metrics.hpp"
#include "mapdr/synthgen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mapdr {
namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Raised for bad flags or missing inputs that CLI11 cannot catch itself.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusView {
  fs::path root;
  bool single = false;
  std::vector<std::string> ids;

  fs::path dir(const std::string& id) const { return single ? root : root / id; }
};

CorpusView open_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw IoError("not a directory: " + root.string());
  CorpusView v;
  v.root = root;
  if (is_clip_dir(root)) {
    v.single = true;
    v.ids = {fs::absolute(root).lexically_normal().filename().string()};
    if (v.ids[0].empty()) v.ids[0] = fs::absolute(root).parent_path().filename().string();
  } else {
    v.ids = list_clip_ids(root);
  }
  return v;
}

std::string with_clip(const std::string& id, const std::string& path, bool single) {
  return single ? path : id + "/" + path;
}

void print_issues(std::ostream& os, const std::vector<ValidationIssue>& issues,
                  const std::string& clip_id, bool single) {
  for (auto i : issues) {
    i.path = with_clip(clip_id, i.path, single);
    os << format_issue(i) << "\n";
  }
}

std::string issue_line(const std::string& clip_id, ValidationIssue issue) {
  issue.path = clip_id + "/" + issue.path;
  return format_issue(issue);
}

void write_output(const std::string& out, const std::string& bytes) {
  if (out.empty() || out == "-") {
    std::cout << bytes;
  } else {
    write_file(out, bytes);
  }
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const std::string& dir, bool strict) {
  const CorpusView corpus = open_corpus(dir);
  if (corpus.ids.empty()) throw IoError("no clips under " + dir);
  bool failed = false;
  for (const auto& id : corpus.ids) {
    const auto issues = validate_clip_dir(corpus.dir(id), strict);
    print_issues(std::cout, issues, id, corpus.single);
    for (const auto& i : issues) failed |= i.severity == Severity::kError;
  }
  return failed ? kFailure : kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
  std::string gt;
  std::string pred;
  std::string out;
  std::string manifest;
  std::size_t thresholds = kDefaultThresholdCount;
  int jobs = 0;
  bool strict = true;
};

json projection_json(const ProjectionConfig& cfg) {
  return {{"quaternion_order", to_string(cfg.quaternion_order)},
          {"pose_direction", to_string(cfg.pose_direction)},
          {"near_clip", cfg.near_clip},
          {"image_width", cfg.image_width},
          {"image_height", cfg.image_height}};
}

struct LoadedPrediction {
  PredictionSet pred;
  std::optional<ValidationIssue> warning;
};

LoadedPrediction load_prediction(const fs::path& dir, const ClipBundle& gt,
                                 bool strict) {
  std::error_code ec;
  if (fs::is_regular_file(dir / kPredictionFile, ec)) {
    try {
      return {parse_prediction(read_file(dir / kPredictionFile), &gt.clip).value, {}};
    } catch (const DatasetError& e) {
      auto issues = e.issues();
      for (auto& i : issues) i.path = std::string(kPredictionFile) + "#" + i.path;
      throw DatasetError(std::move(issues));
    }
  }
  if (fs::is_regular_file(dir / kLabelFile, ec)) {
    // A labelled directory stands in for a prediction at full confidence.
    try {
      const auto labels = parse_labels(read_file(dir / kLabelFile), gt.clip, strict);
      return {prediction_from_labels(labels.value.rules), {}};
    } catch (const DatasetError& e) {
      auto issues = e.issues();
      for (auto& i : issues) i.path = std::string(kLabelFile) + "#" + i.path;
      throw DatasetError(std::move(issues));
    }
  }
  return {{}, ValidationIssue{Severity::kWarning, std::string(kPredictionFile),
                              "missing prediction, counted as empty"}};
}

// Compares per-clip counts with the generator's records.
std::vector<std::string> check_manifest(const std::vector<ManifestEntry>& manifest,
                                        const std::vector<std::string>& ids,
                                        const std::vector<MetricCounts>& counts,
                                        std::span<const double> grid) {
  std::vector<std::string> problems;
  for (const auto& e : manifest) {
    if (!e.expected || !e.corruption) continue;
    const auto it = std::find(ids.begin(), ids.end(), e.clip_id);
    if (it == ids.end()) {
      problems.push_back(e.clip_id + ": not in the evaluated corpus");
      continue;
    }
    const auto& c = counts[static_cast<std::size_t>(it - ids.begin())];
    const auto& x = *e.expected;
    auto expect = [&](const char* name, std::size_t got, std::size_t want) {
      if (got != want) {
        problems.push_back(e.clip_id + ": " + name + " is " + std::to_string(got) +
                           ", manifest says " + std::to_string(want));
      }
    };
    expect("gt_rules", c.gt_rules, x.gt_rules);
    expect("pred_rules", c.pred_rules, x.pred_rules);
    expect("rule_matches", c.rule_matches, x.rule_matches);
    expect("gt_edges", c.gt_edges, x.gt_edges);
    expect("pred_edges", c.pred_edges, x.pred_edges);
    expect("edge_hits", c.edge_hits, x.edge_hits);
    expect("subgraph_hits", c.subgraph_hits, x.subgraph_hits);
    if (const auto tau = separating_threshold(*e.corruption, grid)) {
      const auto t = static_cast<std::size_t>(
          std::find(grid.begin(), grid.end(), *tau) - grid.begin());
      expect("curve_pred at the separating threshold", c.curve_pred[t], x.edge_hits);
      expect("curve_hits at the separating threshold", c.curve_hits[t], x.subgraph_hits);
    }
  }
  return problems;
}

std::vector<std::string> list_clip_ids_or_predictions(const fs::path& root) {
  std::vector<std::string> ids;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (fs::is_regular_file(entry.path() / kPredictionFile, ec) ||
        fs::is_regular_file(entry.path() / kLabelFile, ec)) {
      ids.push_back(entry.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

int cmd_eval(const EvalOptions& opt, const ProjectionConfig& projection) {
  const CorpusView gt = open_corpus(opt.gt);
  if (gt.ids.empty()) throw IoError("no clips under " + opt.gt);
  std::error_code ec;
  if (!fs::is_directory(opt.pred, ec)) throw IoError("not a directory: " + opt.pred);

  std::vector<ClipBundle> bundles;
  std::vector<PredictionSet> preds;
  json warnings = json::array();
  bool failed = false;
  for (const auto& id : gt.ids) {
    ClipBundle b;
    try {
      b = load_clip_dir(gt.dir(id), opt.strict);
    } catch (const DatasetError& e) {
      print_issues(std::cerr, e.issues(), id, false);
      failed = true;
      continue;
    }
    for (const auto& w : b.warnings) warnings.push_back(issue_line(id, w));

    fs::path pred_dir = fs::path(opt.pred) / id;
    if (!fs::is_directory(pred_dir, ec) && gt.single) pred_dir = opt.pred;
    try {
      auto loaded = load_prediction(pred_dir, b, opt.strict);
      if (loaded.warning) {
        const std::string line = issue_line(id, *loaded.warning);
        std::cerr << line << "\n";
        warnings.push_back(line);
      }
      preds.push_back(std::move(loaded.pred));
    } catch (const DatasetError& e) {
      print_issues(std::cerr, e.issues(), id, false);
      failed = true;
      continue;
    }
    bundles.push_back(std::move(b));
  }
  if (failed) return kFailure;

  if (!gt.single && fs::is_directory(opt.pred, ec)) {
    for (const auto& id : list_clip_ids_or_predictions(opt.pred)) {
      if (!std::binary_search(gt.ids.begin(), gt.ids.end(), id)) {
        const std::string line =
          issue_line(id, {Severity::kWarning, "", "prediction has no ground truth, ignored"});
        std::cerr << line << "\n";
        warnings.push_back(line);
      }
    }
  }

  const auto grid = threshold_grid(opt.thresholds);
  std::vector<ClipInput> inputs;
  for (std::size_t i = 0; i < bundles.size(); ++i) {
    inputs.push_back({&bundles[i].labels.rules, &bundles[i].labels.graph, &preds[i]});
  }
  std::vector<MetricCounts> counts;
  try {
    counts = opt.jobs == 1 ? count_corpus_serial(inputs, grid)
                           : count_corpus_parallel(inputs, grid, opt.jobs);
  } catch (const InvariantViolation& e) {
    std::cerr << "error " << e.what() << "\n";
    return kFailure;
  }

  json clips = json::object();
  std::vector<MetricReport> reports;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    reports.push_back(make_report(counts[i], grid));
    clips[bundles[i].clip_id] = json::parse(report_to_json(reports.back()));
  }
  const MetricReport total = aggregate(reports, grid);
  json doc = {
      {"config",
       {{"thresholds", opt.thresholds},
        {"threshold_grid", "i/" + std::to_string(opt.thresholds - 1)},
        {"strict", opt.strict},
        {"aggregation", "micro"},
        {"projection", projection_json(projection)}}},
      {"clips", std::move(clips)},
      {"aggregate", json::parse(report_to_json(total))},
      {"warnings", std::move(warnings)}};
  write_output(opt.out, doc.dump(2) + "\n");

  std::fprintf(stderr,
               "clips %zu  P_RE %.4f  R_RE %.4f  P_CR %.4f  R_CR %.4f  "
               "P_all %.4f  R_all %.4f  AP %.4f\n",
               reports.size(), total.p_re, total.r_re, total.p_cr, total.r_cr,
               total.p_all, total.r_all, total.ap);

  if (!opt.manifest.empty()) {
    std::vector<std::string> ids;
    for (const auto& b : bundles) ids.push_back(b.clip_id);
    std::vector<ManifestEntry> manifest;
    try {
      manifest = parse_manifest(read_file(opt.manifest));
    } catch (const json::exception& e) {
      throw IoError("unreadable manifest: " + std::string(e.what()));
    }
    const auto problems = check_manifest(manifest, ids, counts, grid);
    for (const auto& p : problems) std::cerr << "error " << p << "\n";
    if (!problems.empty()) return kFailure;
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// project

int cmd_project(const std::string& dir, std::string timestamp,
                const std::string& out, const ProjectionConfig& cfg) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("not a directory: " + dir);
  ClipData clip;
  std::vector<LabeledRule> rules;
  try {
    if (fs::is_regular_file(fs::path(dir) / kLabelFile, ec)) {
      auto bundle = load_clip_dir(dir, false);
      clip = std::move(bundle.clip);
      rules = std::move(bundle.labels.rules);
    } else {
      clip = load_clip_data(dir);
    }
  } catch (const DatasetError& e) {
    print_issues(std::cerr, e.issues(), "", true);
    return kFailure;
  }
  if (timestamp.empty()) timestamp = clip.poses.begin()->first;
  const auto pose = clip.poses.find(timestamp);
  if (pose == clip.poses.end()) throw UsageError("no camera pose at timestamp " + timestamp);
  write_output(out, render_overlay_svg(clip, rules, pose->second, cfg));
  return kOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthOptions {
  std::string out;
  std::string pred_out;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  std::optional<int> lanes;
  std::optional<int> rules;
  double lane_width = SceneConfig{}.lane_width;
  double clip_length = SceneConfig{}.clip_length;
  double frame_spacing = SceneConfig{}.frame_spacing;
  double sign_distance = SceneConfig{}.sign_distance;
  CorruptionSpec corruption;
  bool golden = false;
};

std::string clip_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%06zu", i);
  return buf;
}

int cmd_synth(const SynthOptions& opt) {
  validate(opt.corruption);
  const fs::path out = opt.out;
  fs::create_directories(out);
  if (opt.golden) {
    const auto fx = golden_fixture();
    write_clip_dir(out / "golden", fx.clip, fx.rules);
    if (!opt.pred_out.empty()) {
      write_file(fs::path(opt.pred_out) / "golden" / kPredictionFile,
                 write_prediction(fx.prediction));
    }
    return kOk;
  }

  std::vector<ManifestEntry> manifest;
  for (std::size_t i = 0; i < opt.count; ++i) {
    ManifestEntry e;
    e.clip_id = clip_name(i);
    e.seed = opt.seed + i;
    e.scene = random_scene(e.seed);
    if (opt.lanes || opt.rules) {
      e.scene.lane_count = opt.lanes.value_or(SceneConfig{}.lane_count);
      e.scene.rule_count = opt.rules.value_or(std::min(2, e.scene.lane_count));
    }
    e.scene.lane_width = opt.lane_width;
    e.scene.clip_length = opt.clip_length;
    e.scene.frame_spacing = opt.frame_spacing;
    e.scene.sign_distance = opt.sign_distance;

    const auto scene = generate_clip(e.scene, e.seed);
    write_clip_dir(out / e.clip_id, scene.clip, scene.rules);
    if (!opt.pred_out.empty()) {
      const auto c = corrupt(scene.rules, scene.graph, opt.corruption, e.seed);
      write_file(fs::path(opt.pred_out) / e.clip_id / kPredictionFile,
                 write_prediction(c.prediction));
      e.corruption = opt.corruption;
      e.expected = c.expected;
    }
    manifest.push_back(std::move(e));
  }
  write_file(out / "manifest.json", write_manifest(manifest));
  return kOk;
}

// ---------------------------------------------------------------------------
// baseline

int cmd_baseline(const std::string& dir, const std::string& out, bool strict) {
  const CorpusView corpus = open_corpus(dir);
  if (corpus.ids.empty()) throw IoError("no clips under " + dir);
  bool failed = false;
  for (const auto& id : corpus.ids) {
    try {
      const auto bundle = load_clip_dir(corpus.dir(id), strict);
      const auto pred = infer_correspondence(bundle.labels.rules, bundle.clip);
      write_file(fs::path(out) / id / kPredictionFile, write_prediction(pred));
    } catch (const DatasetError& e) {
      print_issues(std::cerr, e.issues(), id, false);
      failed = true;
    } catch (const InvariantViolation& e) {
      std::cerr << "error " << id << " " << e.what() << "\n";
      failed = true;
    }
  }
  return failed ? kFailure : kOk;
}

// ---------------------------------------------------------------------------

struct ProjectionFlags {
  std::string quat;
  std::string pose;
  std::optional<double> near;
  std::optional<int> width;
  std::optional<int> height;

  void attach(CLI::App* app) {
    app->add_option("--quat", quat, "Quaternion order")
        ->check(CLI::IsMember({"xyzw", "wxyz"}));
    app->add_option("--pose", pose, "Pose direction")
        ->check(CLI::IsMember({"camera_to_world", "world_to_camera"}));
    app->add_option("--near", near, "Near clip plane in meters");
    app->add_option("--width", width, "Image width in pixels");
    app->add_option("--height", height, "Image height in pixels");
  }

  // Environment first, then explicit flags.
  ProjectionConfig resolve() const {
    ProjectionConfig cfg;
    if (const char* env = std::getenv("MAPDR_CONVENTIONS")) {
      cfg = parse_conventions(env, cfg);
    }
    std::string spec;
    if (!quat.empty()) spec += "quat=" + quat + ",";
    if (!pose.empty()) spec += "pose=" + pose + ",";
    cfg = parse_conventions(spec, cfg);
    if (near) cfg.near_clip = *near;
    if (width) cfg.image_width = *width;
    if (height) cfg.image_height = *height;
    validate(cfg);
    return cfg;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"MapDR benchmark toolkit"};
  app.require_subcommand(1);

  bool lenient = false;

  std::string validate_dir;
  auto* validate_cmd = app.add_subcommand("validate", "Check a clip or corpus directory");
  validate_cmd->add_option("dir", validate_dir, "Clip or corpus directory")->required();
  validate_cmd->add_flag("--lenient", lenient, "Downgrade dangling centerline ids to warnings");
  validate_cmd->add_flag("--strict", "Strict checks, the default");

  EvalOptions eval;
  ProjectionFlags eval_proj;
  bool eval_lenient = false;
  auto* eval_cmd = app.add_subcommand("eval", "Score predictions against ground truth");
  eval_cmd->add_option("gt", eval.gt, "Ground-truth clip or corpus directory")->required();
  eval_cmd->add_option("pred", eval.pred, "Prediction directory")->required();
  eval_cmd->add_option("-o,--out", eval.out, "Report path, '-' for stdout");
  eval_cmd->add_option("--thresholds", eval.thresholds, "Threshold count for the PR sweep")
      ->check(CLI::Range(std::size_t{2}, std::size_t{1000000}));
  eval_cmd->add_option("-j,--jobs", eval.jobs, "Worker threads, 0 for all cores")
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_option("--manifest", eval.manifest, "Check counts against a synth manifest");
  eval_cmd->add_flag("--lenient", eval_lenient, "Lenient label parsing");
  eval_proj.attach(eval_cmd);

  std::string project_dir, project_ts, project_out;
  ProjectionFlags project_proj;
  auto* project_cmd = app.add_subcommand("project", "Render an SVG overlay for one frame");
  project_cmd->add_option("dir", project_dir, "Clip directory")->required();
  project_cmd->add_option("-t,--timestamp", project_ts, "Pose timestamp, first pose if omitted");
  project_cmd->add_option("-o,--out", project_out, "SVG path, '-' for stdout");
  project_proj.attach(project_cmd);

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth_cmd->add_option("-o,--out", synth.out, "Corpus directory")->required();
  synth_cmd->add_option("--pred-out", synth.pred_out, "Write corrupted predictions here");
  synth_cmd->add_option("-n,--count", synth.count, "Number of clips");
  synth_cmd->add_option("--seed", synth.seed, "Seed of the first clip");
  synth_cmd->add_option("--lanes", synth.lanes, "Lane count for every clip")
      ->check(CLI::Range(1, 8));
  synth_cmd->add_option("--rules", synth.rules, "Rule count for every clip")
      ->check(CLI::Range(1, 8));
  synth_cmd->add_option("--lane-width", synth.lane_width, "Lane width in meters");
  synth_cmd->add_option("--length", synth.clip_length, "Clip length in meters");
  synth_cmd->add_option("--spacing", synth.frame_spacing, "Meters between frames");
  synth_cmd->add_option("--sign-distance", synth.sign_distance, "Sign distance in meters");
  synth_cmd->add_option("--drop-rule", synth.corruption.drop_rule_p, "P(drop a rule)");
  synth_cmd->add_option("--perturb", synth.corruption.perturb_property_p,
                        "P(change one rule property)");
  synth_cmd->add_option("--drop-edge", synth.corruption.drop_edge_p, "P(drop an edge)");
  synth_cmd->add_option("--add-edge", synth.corruption.add_edge_p, "P(add a wrong edge)");
  synth_cmd->add_option("--correct-low", synth.corruption.correct_low,
                        "Lowest confidence of a correct edge");
  synth_cmd->add_option("--wrong-high", synth.corruption.wrong_high,
                        "Highest confidence of a wrong edge");
  synth_cmd->add_flag("--golden", synth.golden, "Write the hand-built metric fixture instead");

  std::string baseline_dir, baseline_out;
  bool baseline_lenient = false;
  auto* baseline_cmd = app.add_subcommand("baseline", "Predict edges from rule indices");
  baseline_cmd->add_option("dir", baseline_dir, "Clip or corpus directory")->required();
  baseline_cmd->add_option("-o,--out", baseline_out, "Prediction directory")->required();
  baseline_cmd->add_flag("--lenient", baseline_lenient, "Lenient label parsing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate_cmd) return cmd_validate(validate_dir, !lenient);
    if (*eval_cmd) {
      eval.strict = !eval_lenient;
      return cmd_eval(eval, eval_proj.resolve());
    }
    if (*project_cmd) {
      return cmd_project(project_dir, project_ts, project_out, project_proj.resolve());
    }
    if (*synth_cmd) return cmd_synth(synth);
    if (*baseline_cmd) return cmd_baseline(baseline_dir, baseline_out, !baseline_lenient);
  } catch (const IoError& e) {
    std::cerr << "error " << e.what() << "\n";
    return kUsage;
  } catch (const UsageError& e) {
    std::cerr << "error " << e.what() << "\n";
    return kUsage;
  } catch (const DatasetError& e) {
    print_issues(std::cerr, e.issues(), "", true);
    return kFailure;
  } catch (const InvariantViolation& e) {
    std::cerr << "error " << e.what() << "\n";
    return kFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error " << e.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace
}  // namespace mapdr

int main(int argc, char** argv) { return mapdr::run(argc, argv); }
