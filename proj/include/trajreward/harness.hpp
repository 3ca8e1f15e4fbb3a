// Copyright 2026 The trajreward Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRAJREWARD__HARNESS_HPP_
#define TRAJREWARD__HARNESS_HPP_

#include "trajreward/grpo.hpp"
#include "trajreward/metrics.hpp"
#include "trajreward/response_format.hpp"
#include "trajreward/rewards.hpp"

#include "json.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trajreward
{

/// Scoring, reward and optimizer settings shared by the CLI subcommands.
struct EvalConfig
{
  RewardConfig reward;
  GrpoConfig<double> grpo;
  int resample_k = static_cast<int>(kDefaultResampleCount);
  double tau = 0.5;                 // IoU threshold for affordance success
  double penalty_distance = 300.0;  // DFD/HD/RMSE assigned to unparseable predictions
  bool segment_hausdorff = false;

  void validate() const;
};

/// Reads a JSON config whose keys mirror the config field names. Unknown
/// keys and invalid values raise ConfigError.
EvalConfig config_from_json(const nlohmann::json & j);
EvalConfig load_config(const std::filesystem::path & path);

/// One evaluation trial: ground truth, raw model response and the trial
/// outcomes the success rules need.
struct EvalRecord
{
  std::string id;
  TaskKind kind = TaskKind::trajectory;
  /// Affordance ground truth holds zero boxes (no object) or one box.
  Payload gt = AffordancePayload{};
  bool gt_flagged = false;
  std::string pred_raw;
  std::optional<bool> object_present;
  std::optional<bool> grasp_success;
  std::optional<bool> reached_goal;
};

enum class RecordErrorCode { schema_violation, duplicate_id };

struct RecordError
{
  RecordErrorCode code;
  std::size_t line;  // 1-based
  std::string message;
};

std::string_view to_string(RecordErrorCode code);

struct LoadResult
{
  std::vector<EvalRecord> records;
  std::vector<RecordError> errors;

  bool ok() const { return errors.empty(); }
};

/// Parses one JSON object per line. Every bad line is reported; blank lines
/// are skipped. When `kind` is set, records of another kind are schema
/// violations.
LoadResult read_records(std::istream & in, std::optional<TaskKind> kind = std::nullopt);
LoadResult load_records(
  const std::filesystem::path & path, std::optional<TaskKind> kind = std::nullopt);

struct RecordScore
{
  std::string id;
  TaskKind kind = TaskKind::trajectory;
  bool parse_failure = false;
  bool flagged = false;
  std::optional<double> iou;   // affordance records with a ground-truth box
  std::optional<double> giou;  // of the best-IoU predicted box
  std::optional<TrajectoryScore<double>> trajectory;
  std::size_t pred_boxes = 0;
  std::optional<bool> object_present;
  std::optional<bool> grasp_success;
  std::optional<bool> reached_goal;
  std::optional<bool> success;  // empty when a needed trial fact is missing

  bool operator==(const RecordScore & other) const;
};

/// Scores one record. Never throws for a malformed prediction: a parse
/// failure is flagged and gets IoU 0 or the penalty distance.
RecordScore score_record(const EvalRecord & rec, const EvalConfig & cfg);

/// Affordance: success iff (object present, IoU >= tau and grasped) or (no
/// object and no predicted box). Trajectory: success iff the goal was
/// reached. Throws MissingTrialFact when the rule needs an absent fact.
bool trial_success(const RecordScore & score, double tau);

/// Successful trials over total trials.
double success_rate(std::span<const RecordScore> scores);

nlohmann::json to_json(const RecordScore & score);
RecordScore record_score_from_json(const nlohmann::json & j);

void write_scores(std::ostream & out, std::span<const RecordScore> scores);
std::vector<RecordScore> read_scores(std::istream & in);

struct ReportRow
{
  std::string label;
  std::size_t n = 0;
  AggregateRow<double> means;
  std::optional<double> success_rate;
  std::size_t parse_failures = 0;
  std::size_t flagged = 0;
};

/// One row per kind present, then an overall row.
struct Report
{
  std::vector<ReportRow> rows;
};

Report build_report(std::span<const RecordScore> scores);

enum class ReportFormat { table, delimited };

/// Columns kind, IoU, DFD, HD, RMSE, Avg, SR, N, parse_failures. IoU is on
/// a 0-100 scale; metrics print with two decimals; missing values are blank.
std::string format_report(const Report & report, ReportFormat format);

std::string emit_report(std::span<const RecordScore> scores, ReportFormat format);

}  // namespace trajreward

#endif  // TRAJREWARD__HARNESS_HPP_
