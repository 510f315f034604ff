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

// Reading, validation and canonical writing of clip data, label and
// prediction documents, plus the on-disk clip directory layout:
//
//   <clip>/data.json         clip geometry, intrinsics and poses
//   <clip>/label.json        formatted rules and their centerlines
//   <clip>/prediction.json   optional model output
//   <clip>/frames/<ts>.jpg   optional frame images (never decoded)
//
// Parsers collect every problem they find. Errors abort the parse with a
// DatasetError carrying the full issue list; warnings are returned next to
// the parsed value. Each issue carries a JSON pointer into the input.

#ifndef MAPDR_DATASET_IO_HPP_
#define MAPDR_DATASET_IO_HPP_

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mapdr/core_model.hpp"

namespace mapdr {

enum class Severity { kError, kWarning };

std::string_view to_string(Severity s);

struct ValidationIssue {
  Severity severity = Severity::kError;
  std::string path;  // JSON pointer, "" addresses the whole document
  std::string message;

  friend bool operator==(const ValidationIssue&,
                         const ValidationIssue&) = default;
};

/// "severity path message", the format printed by `mapdr validate`.
std::string format_issue(const ValidationIssue& issue);

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(std::vector<ValidationIssue> issues);
  const std::vector<ValidationIssue>& issues() const { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

/// File system failure (missing directory, unreadable file).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct Parsed {
  T value;
  std::vector<ValidationIssue> warnings;
};

struct LabelBundle {
  std::vector<LabeledRule> rules;  // ordered by RuleKeyLess
  CorrespondenceGraph graph;
};

Parsed<ClipData> parse_clip(std::string_view bytes);
std::string write_clip(const ClipData& clip);

/// In strict mode every centerline id must name a type-3 vector of `clip`;
/// in lenient mode dangling ids are dropped with a warning.
Parsed<LabelBundle> parse_labels(std::string_view bytes, const ClipData& clip,
                                 bool strict);
std::string write_labels(const std::vector<LabeledRule>& rules);

/// When `clip` is given, edge endpoints must be centerlines of it.
Parsed<PredictionSet> parse_prediction(std::string_view bytes,
                                       const ClipData* clip = nullptr);
std::string write_prediction(const PredictionSet& pred);

/// Re-emits any JSON document with sorted keys, two-space indentation and
/// shortest round-trip numbers.
std::string canonical_json(std::string_view bytes);

// ---------------------------------------------------------------------------
// Directory layout

inline constexpr std::string_view kDataFile = "data.json";
inline constexpr std::string_view kLabelFile = "label.json";
inline constexpr std::string_view kPredictionFile = "prediction.json";
inline constexpr std::string_view kFramesDir = "frames";

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

struct ClipBundle {
  std::string clip_id;
  ClipData clip;
  LabelBundle labels;
  std::vector<ValidationIssue> warnings;
};

/// Loads data.json, label.json and the frame listing of one clip directory.
/// Issue paths are prefixed with the file name, e.g. "label.json#/0/centerline".
ClipBundle load_clip_dir(const std::filesystem::path& dir, bool strict);

/// Loads only data.json and frames.
ClipData load_clip_data(const std::filesystem::path& dir);

void write_clip_dir(const std::filesystem::path& dir, const ClipData& clip,
                    const std::vector<LabeledRule>& rules);

/// A directory is a clip directory when it holds data.json.
bool is_clip_dir(const std::filesystem::path& dir);

/// Sorted ids of the clip directories directly below `corpus`.
std::vector<std::string> list_clip_ids(const std::filesystem::path& corpus);

/// Runs every check on one clip directory without throwing for document
/// problems. A present prediction.json is validated too.
std::vector<ValidationIssue> validate_clip_dir(const std::filesystem::path& dir,
                                               bool strict);

}  // namespace mapdr

#endif  // MAPDR_DATASET_IO_HPP_
