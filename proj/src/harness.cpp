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

#include "trajreward/harness.hpp"

#include "trajreward/errors.hpp"
#include "trajreward/frechet.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <iterator>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>
#include <unordered_set>
#include <utility>

namespace trajreward
{

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void EvalConfig::validate() const
{
  reward.validate();
  grpo.validate();
  if (resample_k < 2) {
    throw ConfigError("resample_k must be >= 2");
  }
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw ConfigError("tau must lie in [0, 1]");
  }
  if (!(penalty_distance >= 0.0) || !std::isfinite(penalty_distance)) {
    throw ConfigError("penalty_distance must be finite and >= 0");
  }
}

namespace
{

double config_number(const json & j, const std::string & key)
{
  if (!j.is_number()) {
    throw ConfigError("config key '" + key + "' must be a number");
  }
  return j.get<double>();
}

bool config_bool(const json & j, const std::string & key)
{
  if (!j.is_boolean()) {
    throw ConfigError("config key '" + key + "' must be a boolean");
  }
  return j.get<bool>();
}

void require_object(const json & j, const std::string & what)
{
  if (!j.is_object()) {
    throw ConfigError(what + " must be a JSON object");
  }
}

}  // namespace

EvalConfig config_from_json(const json & j)
{
  require_object(j, "config");
  EvalConfig cfg;
  for (const auto & [key, value] : j.items()) {
    if (key == "alaf") {
      require_object(value, "alaf");
      for (const auto & [k, v] : value.items()) {
        if (k == "lambda_theta") {
          cfg.reward.alaf.lambda_theta = config_number(v, k);
        } else if (k == "lambda_r") {
          cfg.reward.alaf.lambda_r = config_number(v, k);
        } else {
          throw ConfigError("unknown config key 'alaf." + k + "'");
        }
      }
    } else if (key == "grpo") {
      require_object(value, "grpo");
      for (const auto & [k, v] : value.items()) {
        if (k == "clip_eps") {
          cfg.grpo.clip_eps = config_number(v, k);
        } else if (k == "kl_beta") {
          cfg.grpo.kl_beta = config_number(v, k);
        } else if (k == "std_floor") {
          cfg.grpo.std_floor = config_number(v, k);
        } else if (k == "mean_over_group") {
          cfg.grpo.mean_over_group = config_bool(v, k);
        } else {
          throw ConfigError("unknown config key 'grpo." + k + "'");
        }
      }
    } else if (key == "norm_scale") {
      cfg.reward.norm_scale = config_number(value, key);
    } else if (key == "w_task") {
      cfg.reward.w_task = config_number(value, key);
    } else if (key == "w_format") {
      cfg.reward.w_format = config_number(value, key);
    } else if (key == "parse_fail_task_reward") {
      cfg.reward.parse_fail_task_reward = config_number(value, key);
    } else if (key == "normalization") {
      if (value == "rational") {
        cfg.reward.normalization = DistanceNormalization::rational;
      } else if (value == "linear") {
        cfg.reward.normalization = DistanceNormalization::linear;
      } else {
        throw ConfigError("normalization must be \"rational\" or \"linear\"");
      }
    } else if (key == "resample_k") {
      if (!value.is_number_integer()) {
        throw ConfigError("config key 'resample_k' must be an integer");
      }
      cfg.resample_k = value.get<int>();
    } else if (key == "tau") {
      cfg.tau = config_number(value, key);
    } else if (key == "penalty_distance") {
      cfg.penalty_distance = config_number(value, key);
    } else if (key == "segment_hausdorff") {
      cfg.segment_hausdorff = config_bool(value, key);
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

EvalConfig load_config(const std::filesystem::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file " + path.string());
  }
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error & e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Records

std::string_view to_string(RecordErrorCode code)
{
  return code == RecordErrorCode::schema_violation ? "SchemaViolation" : "DuplicateId";
}

namespace
{

class SchemaError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

double coordinate(const json & j, const char * what)
{
  if (!j.is_number() || !std::isfinite(j.get<double>())) {
    throw SchemaError(std::string(what) + " coordinates must be finite numbers");
  }
  return j.get<double>();
}

std::optional<bool> optional_bool(const json & obj, const char * key)
{
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) {
    return std::nullopt;
  }
  if (!it->is_boolean()) {
    throw SchemaError(std::string("'") + key + "' must be a boolean");
  }
  return it->get<bool>();
}

EvalRecord parse_record(const json & j, std::optional<TaskKind> expected)
{
  static const std::set<std::string> kKeys = {
    "id", "kind", "gt", "pred_raw", "object_present", "grasp_success", "reached_goal"};
  if (!j.is_object()) {
    throw SchemaError("record must be a JSON object");
  }
  for (const auto & [key, value] : j.items()) {
    if (!kKeys.count(key)) {
      throw SchemaError("unknown field '" + key + "'");
    }
  }
  EvalRecord rec;

  const auto id = j.find("id");
  if (id == j.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw SchemaError("'id' must be a non-empty string");
  }
  rec.id = id->get<std::string>();

  const auto kind = j.find("kind");
  if (kind == j.end() || !kind->is_string()) {
    throw SchemaError("'kind' must be \"affordance\" or \"trajectory\"");
  }
  const auto parsed_kind = parse_task_kind(kind->get<std::string>());
  if (!parsed_kind) {
    throw SchemaError("'kind' must be \"affordance\" or \"trajectory\"");
  }
  rec.kind = *parsed_kind;
  if (expected && *expected != rec.kind) {
    throw SchemaError(
      "record kind '" + std::string(to_string(rec.kind)) + "' does not match --kind " +
      std::string(to_string(*expected)));
  }

  const auto pred = j.find("pred_raw");
  if (pred == j.end() || !pred->is_string()) {
    throw SchemaError("'pred_raw' must be a string");
  }
  rec.pred_raw = pred->get<std::string>();

  rec.object_present = optional_bool(j, "object_present");
  rec.grasp_success = optional_bool(j, "grasp_success");
  rec.reached_goal = optional_bool(j, "reached_goal");

  const auto gt = j.find("gt");
  if (gt == j.end()) {
    throw SchemaError("missing field 'gt'");
  }

  if (rec.kind == TaskKind::affordance) {
    if (rec.reached_goal) {
      throw SchemaError("'reached_goal' belongs to trajectory records");
    }
    AffordancePayload payload;
    if (gt->is_null()) {
      if (rec.object_present != false) {
        throw SchemaError("a null 'gt' box requires object_present = false");
      }
    } else {
      if (!gt->is_array() || gt->size() != 4) {
        throw SchemaError("affordance 'gt' must be [x1,y1,x2,y2] or null");
      }
      const auto nb = normalize_box(Box<double>{
        coordinate((*gt)[0], "gt"), coordinate((*gt)[1], "gt"), coordinate((*gt)[2], "gt"),
        coordinate((*gt)[3], "gt")});
      if (rec.object_present == false) {
        throw SchemaError("object_present = false requires a null 'gt'");
      }
      payload.boxes.push_back(nb.box);
      rec.gt_flagged = nb.flagged;
    }
    rec.gt = std::move(payload);
  } else {
    if (rec.object_present || rec.grasp_success) {
      throw SchemaError("'object_present' and 'grasp_success' belong to affordance records");
    }
    if (!gt->is_array() || gt->size() < 2) {
      throw SchemaError("trajectory 'gt' must be a list of at least two [x,y] waypoints");
    }
    PointMatrix<double> pts(static_cast<Eigen::Index>(gt->size()), 2);
    Eigen::Index i = 0;
    for (const auto & wp : *gt) {
      if (!wp.is_array() || wp.size() != 2) {
        throw SchemaError("trajectory 'gt' waypoints must be [x,y] pairs");
      }
      pts(i, 0) = coordinate(wp[0], "gt");
      pts(i, 1) = coordinate(wp[1], "gt");
      ++i;
    }
    auto traj = Trajectory<double>::clamped_to_frame(std::move(pts));
    rec.gt_flagged = traj.clamped();
    rec.gt = TrajectoryPayload{std::move(traj)};
  }
  return rec;
}

bool is_blank(const std::string & line)
{
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

LoadResult read_records(std::istream & in, std::optional<TaskKind> kind)
{
  LoadResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) {
      continue;
    }
    try {
      EvalRecord rec = parse_record(json::parse(line), kind);
      if (!seen.insert(rec.id).second) {
        result.errors.push_back(
          {RecordErrorCode::duplicate_id, line_no, "duplicate id '" + rec.id + "'"});
        continue;
      }
      result.records.push_back(std::move(rec));
    } catch (const json::exception & e) {
      result.errors.push_back({RecordErrorCode::schema_violation, line_no, e.what()});
    } catch (const SchemaError & e) {
      result.errors.push_back({RecordErrorCode::schema_violation, line_no, e.what()});
    }
  }
  return result;
}

LoadResult load_records(const std::filesystem::path & path, std::optional<TaskKind> kind)
{
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open record file " + path.string());
  }
  return read_records(in, kind);
}

// ---------------------------------------------------------------------------
// Scoring

bool RecordScore::operator==(const RecordScore & o) const
{
  const auto same_traj = [](const auto & a, const auto & b) {
    if (a.has_value() != b.has_value()) {
      return false;
    }
    return !a || (a->dfd() == b->dfd() && a->hd() == b->hd() && a->rmse() == b->rmse() &&
      a->avg() == b->avg());
  };
  return id == o.id && kind == o.kind && parse_failure == o.parse_failure &&
    flagged == o.flagged && iou == o.iou && giou == o.giou && same_traj(trajectory, o.trajectory) &&
    pred_boxes == o.pred_boxes && object_present == o.object_present &&
    grasp_success == o.grasp_success && reached_goal == o.reached_goal && success == o.success;
}

RecordScore score_record(const EvalRecord & rec, const EvalConfig & cfg)
{
  RecordScore s;
  s.id = rec.id;
  s.kind = rec.kind;
  s.object_present = rec.object_present;
  s.grasp_success = rec.grasp_success;
  s.reached_goal = rec.reached_goal;

  const ParseResult parsed = parse_response(rec.pred_raw, rec.kind);
  s.parse_failure = !parsed.ok();
  s.flagged = rec.gt_flagged || s.parse_failure || (parsed.ok() && parsed.value().flagged);

  if (rec.kind == TaskKind::affordance) {
    const auto & gt_boxes = std::get<AffordancePayload>(rec.gt).boxes;
    if (parsed.ok()) {
      const auto & boxes = std::get<AffordancePayload>(parsed.value().payload).boxes;
      s.pred_boxes = boxes.size();
      if (!gt_boxes.empty()) {
        s.iou = 0.0;
        for (const auto & b : boxes) {
          const double iou = box_iou(b, gt_boxes.front());
          if (!s.giou || iou > *s.iou) {
            s.iou = iou;
            s.giou = giou(b, gt_boxes.front());
          }
        }
      }
    } else if (!gt_boxes.empty()) {
      s.iou = 0.0;
    }
  } else {
    if (parsed.ok()) {
      s.trajectory = score_trajectory(
        std::get<TrajectoryPayload>(parsed.value().payload).waypoints,
        std::get<TrajectoryPayload>(rec.gt).waypoints, cfg.resample_k, cfg.segment_hausdorff);
    } else {
      const double p = cfg.penalty_distance;
      s.trajectory = TrajectoryScore<double>(p, p, p);
    }
  }

  try {
    s.success = trial_success(s, cfg.tau);
  } catch (const MissingTrialFact &) {
    s.success = std::nullopt;
  }
  return s;
}

bool trial_success(const RecordScore & score, double tau)
{
  if (score.kind == TaskKind::trajectory) {
    if (!score.reached_goal) {
      throw MissingTrialFact("trajectory record '" + score.id + "' has no reached_goal");
    }
    return *score.reached_goal;
  }
  if (!score.object_present) {
    throw MissingTrialFact("affordance record '" + score.id + "' has no object_present");
  }
  if (!*score.object_present) {
    return !score.parse_failure && score.pred_boxes == 0;
  }
  if (!score.grasp_success) {
    throw MissingTrialFact("affordance record '" + score.id + "' has no grasp_success");
  }
  return score.iou.value_or(0.0) >= tau && *score.grasp_success;
}

double success_rate(std::span<const RecordScore> scores)
{
  if (scores.empty()) {
    throw EmptyInput("success rate needs at least one trial");
  }
  std::size_t successes = 0;
  for (const auto & s : scores) {
    if (!s.success) {
      throw MissingTrialFact("record '" + s.id + "' lacks the trial facts its success rule needs");
    }
    successes += *s.success ? 1 : 0;
  }
  return static_cast<double>(successes) / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------
// Score files

namespace
{

json optional_json(const std::optional<double> & v)
{
  return v ? json(*v) : json(nullptr);
}

json optional_json(const std::optional<bool> & v)
{
  return v ? json(*v) : json(nullptr);
}

std::optional<double> optional_double_field(const json & j, const char * key)
{
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->get<double>();
}

std::optional<bool> optional_bool_field(const json & j, const char * key)
{
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    return std::nullopt;
  }
  return it->get<bool>();
}

}  // namespace

json to_json(const RecordScore & s)
{
  json j;
  j["id"] = s.id;
  j["kind"] = std::string(to_string(s.kind));
  j["parse_failure"] = s.parse_failure;
  j["flagged"] = s.flagged;
  j["iou"] = optional_json(s.iou);
  j["giou"] = optional_json(s.giou);
  if (s.trajectory) {
    j["dfd"] = s.trajectory->dfd();
    j["hd"] = s.trajectory->hd();
    j["rmse"] = s.trajectory->rmse();
    j["avg"] = s.trajectory->avg();
  } else {
    j["dfd"] = j["hd"] = j["rmse"] = j["avg"] = nullptr;
  }
  j["pred_boxes"] = s.pred_boxes;
  j["object_present"] = optional_json(s.object_present);
  j["grasp_success"] = optional_json(s.grasp_success);
  j["reached_goal"] = optional_json(s.reached_goal);
  j["success"] = optional_json(s.success);
  return j;
}

RecordScore record_score_from_json(const json & j)
{
  RecordScore s;
  s.id = j.at("id").get<std::string>();
  const auto kind = parse_task_kind(j.at("kind").get<std::string>());
  if (!kind) {
    throw std::invalid_argument("score record has an unknown kind");
  }
  s.kind = *kind;
  s.parse_failure = j.at("parse_failure").get<bool>();
  s.flagged = j.at("flagged").get<bool>();
  s.iou = optional_double_field(j, "iou");
  s.giou = optional_double_field(j, "giou");
  const auto dfd = optional_double_field(j, "dfd");
  if (dfd) {
    s.trajectory = TrajectoryScore<double>(
      *dfd, j.at("hd").get<double>(), j.at("rmse").get<double>(), j.at("avg").get<double>());
  }
  s.pred_boxes = j.at("pred_boxes").get<std::size_t>();
  s.object_present = optional_bool_field(j, "object_present");
  s.grasp_success = optional_bool_field(j, "grasp_success");
  s.reached_goal = optional_bool_field(j, "reached_goal");
  s.success = optional_bool_field(j, "success");
  return s;
}

void write_scores(std::ostream & out, std::span<const RecordScore> scores)
{
  for (const auto & s : scores) {
    out << to_json(s).dump() << '\n';
  }
}

std::vector<RecordScore> read_scores(std::istream & in)
{
  std::vector<RecordScore> scores;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (is_blank(line)) {
      continue;
    }
    try {
      scores.push_back(record_score_from_json(json::parse(line)));
    } catch (const std::exception & e) {
      throw std::runtime_error("score line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return scores;
}

// ---------------------------------------------------------------------------
// Reports

namespace
{

ReportRow summarize(std::string label, std::span<const RecordScore> scores)
{
  ReportRow row;
  row.label = std::move(label);
  row.n = scores.size();
  std::vector<TrajectoryScore<double>> traj;
  std::vector<double> ious;
  bool all_have_facts = !scores.empty();
  for (const auto & s : scores) {
    row.parse_failures += s.parse_failure ? 1 : 0;
    row.flagged += s.flagged ? 1 : 0;
    if (s.trajectory) {
      traj.push_back(*s.trajectory);
    }
    if (s.iou) {
      ious.push_back(*s.iou);
    }
    all_have_facts = all_have_facts && s.success.has_value();
  }
  if (!traj.empty() || !ious.empty()) {
    row.means = aggregate<double>(traj, ious);
  }
  if (all_have_facts) {
    row.success_rate = success_rate(scores);
  }
  return row;
}

std::string cell(const std::optional<double> & v, double scale = 1.0)
{
  if (!v) {
    return {};
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", *v * scale + 0.0);
  return buf;
}

}  // namespace

Report build_report(std::span<const RecordScore> scores)
{
  std::vector<RecordScore> sorted(scores.begin(), scores.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto & a, const auto & b) {
    return std::tie(a.id, a.kind) < std::tie(b.id, b.kind);
  });

  Report report;
  for (const TaskKind kind : {TaskKind::affordance, TaskKind::trajectory}) {
    std::vector<RecordScore> of_kind;
    std::copy_if(sorted.begin(), sorted.end(), std::back_inserter(of_kind), [kind](const auto & s) {
      return s.kind == kind;
    });
    if (!of_kind.empty()) {
      report.rows.push_back(summarize(std::string(to_string(kind)), of_kind));
    }
  }
  report.rows.push_back(summarize("overall", sorted));
  return report;
}

std::string format_report(const Report & report, ReportFormat format)
{
  static const char * kColumns[] = {"kind", "IoU", "DFD", "HD", "RMSE", "Avg", "SR", "N",
    "parse_failures"};
  std::vector<std::vector<std::string>> table;
  table.emplace_back(std::begin(kColumns), std::end(kColumns));
  for (const auto & row : report.rows) {
    table.push_back({
      row.label, cell(row.means.iou, 100.0), cell(row.means.dfd), cell(row.means.hd),
      cell(row.means.rmse), cell(row.means.avg), cell(row.success_rate), std::to_string(row.n),
      std::to_string(row.parse_failures)});
  }

  std::ostringstream out;
  if (format == ReportFormat::delimited) {
    for (const auto & line : table) {
      for (std::size_t c = 0; c < line.size(); ++c) {
        out << (c ? "," : "") << line[c];
      }
      out << '\n';
    }
    return out.str();
  }

  std::vector<std::size_t> width(table.front().size(), 0);
  for (const auto & line : table) {
    for (std::size_t c = 0; c < line.size(); ++c) {
      width[c] = std::max(width[c], line[c].size());
    }
  }
  for (const auto & line : table) {
    std::string text;
    for (std::size_t c = 0; c < line.size(); ++c) {
      std::ostringstream field;
      if (c == 0) {
        field << std::left << std::setw(static_cast<int>(width[c])) << line[c];
      } else {
        field << "  " << std::right << std::setw(static_cast<int>(width[c])) << line[c];
      }
      text += field.str();
    }
    while (!text.empty() && text.back() == ' ') {
      text.pop_back();
    }
    out << text << '\n';
  }
  return out.str();
}

std::string emit_report(std::span<const RecordScore> scores, ReportFormat format)
{
  return format_report(build_report(scores), format);
}

}  // namespace trajreward
