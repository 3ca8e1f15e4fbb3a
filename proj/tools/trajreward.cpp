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

#include "trajreward/errors.hpp"
#include "trajreward/harness.hpp"
#include "trajreward/toy_trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace
{

using namespace trajreward;

constexpr int kExitOk = 0;
constexpr int kExitSchema = 1;
constexpr int kExitConfig = 2;

struct Options
{
  std::string kind;
  std::string input;
  std::string config;
  std::string out;
  std::string scores;
  std::string format = "table";
  int resample_k = 0;
  double tau = 0.0;
  double penalty_distance = 0.0;
  bool segment_hausdorff = false;

  int iters = TrainConfig{}.iterations;
  int group_size = TrainConfig{}.group_size;
  double clip_eps = GrpoConfig<double>{}.clip_eps;
  double kl_beta = GrpoConfig<double>{}.kl_beta;
  double step_size = TrainConfig{}.step_size;
  int updates_per_iter = TrainConfig{}.updates_per_iteration;
  int horizon = kDefaultHorizon;
  std::uint64_t seed = 0;
};

std::optional<TaskKind> kind_option(const Options & opt)
{
  if (opt.kind.empty()) {
    return std::nullopt;
  }
  return parse_task_kind(opt.kind);
}

// True when `name` exists on this subcommand and was given.
bool given(const CLI::App & sub, const std::string & name)
{
  const CLI::Option * o = sub.get_option_no_throw(name);
  return o != nullptr && o->count() > 0;
}

EvalConfig eval_config(const Options & opt, const CLI::App & sub)
{
  EvalConfig cfg = opt.config.empty() ? EvalConfig{} : load_config(opt.config);
  if (given(sub, "--resample-k")) {
    cfg.resample_k = opt.resample_k;
  }
  if (given(sub, "--tau")) {
    cfg.tau = opt.tau;
  }
  if (given(sub, "--penalty-distance")) {
    cfg.penalty_distance = opt.penalty_distance;
  }
  if (given(sub, "--segment-hausdorff")) {
    cfg.segment_hausdorff = true;
  }
  cfg.validate();
  return cfg;
}

std::optional<std::vector<EvalRecord>> load_or_report(const Options & opt)
{
  const LoadResult loaded = load_records(opt.input, kind_option(opt));
  if (!loaded.ok()) {
    for (const auto & e : loaded.errors) {
      std::cerr << opt.input << ':' << e.line << ": " << to_string(e.code) << ": " << e.message
                << '\n';
    }
    return std::nullopt;
  }
  return loaded.records;
}

int run_score(const Options & opt, const CLI::App & sub)
{
  const EvalConfig cfg = eval_config(opt, sub);
  const auto records = load_or_report(opt);
  if (!records) {
    return kExitSchema;
  }
  std::vector<RecordScore> scores;
  scores.reserve(records->size());
  for (const auto & rec : *records) {
    scores.push_back(score_record(rec, cfg));
  }
  std::ofstream out(opt.out);
  if (!out) {
    std::cerr << "cannot write " << opt.out << '\n';
    return kExitSchema;
  }
  write_scores(out, scores);
  std::cout << emit_report(scores, ReportFormat::table);
  return kExitOk;
}

int run_reward(const Options & opt, const CLI::App & sub)
{
  const EvalConfig cfg = eval_config(opt, sub);
  const auto records = load_or_report(opt);
  if (!records) {
    return kExitSchema;
  }
  for (const auto & rec : *records) {
    const RewardBreakdown r = composite_reward(rec.pred_raw, rec.gt, rec.kind, cfg.reward);
    nlohmann::json j;
    j["id"] = rec.id;
    j["reward"] = r.total;
    j["task"] = r.task;
    j["format"] = r.format;
    std::cout << j.dump() << '\n';
  }
  return kExitOk;
}

int run_train_toy(const Options & opt)
{
  TrainConfig cfg;
  if (!opt.config.empty()) {
    const EvalConfig file_cfg = load_config(opt.config);
    cfg.reward = file_cfg.reward;
    cfg.grpo = file_cfg.grpo;
  }
  cfg.iterations = opt.iters;
  cfg.group_size = opt.group_size;
  cfg.grpo.clip_eps = opt.clip_eps;
  cfg.grpo.kl_beta = opt.kl_beta;
  cfg.step_size = opt.step_size;
  cfg.updates_per_iteration = opt.updates_per_iter;
  cfg.seed = opt.seed;
  cfg.validate();
  if (opt.horizon < 2) {
    throw ConfigError("horizon must be >= 2");
  }

  const auto tasks = default_task_set(opt.horizon);
  SoftmaxPolicy policy(static_cast<int>(tasks.size()), opt.horizon);
  const SoftmaxPolicy reference = policy;
  const TrainLog log = train(tasks, policy, cfg);

  std::ofstream out(opt.out);
  if (!out) {
    std::cerr << "cannot write " << opt.out << '\n';
    return kExitSchema;
  }
  log.write_csv(out);

  nlohmann::json summary;
  summary["iterations"] = cfg.iterations;
  summary["optimizer_steps"] = log.entries.size();
  summary["seed"] = cfg.seed;
  if (!log.entries.empty()) {
    const int iters = cfg.iterations;
    const int window = std::min(20, iters);
    const double first = log.mean_reward(0, window);
    const double last = log.mean_reward(iters - window, iters);
    summary["first_window_mean_reward"] = first;
    summary["last_window_mean_reward"] = last;
    summary["improvement"] = last - first;
    summary["final_loss"] = log.entries.back().loss;
    summary["final_kl"] = log.entries.back().kl;
  }
  summary["max_tv_from_reference"] = max_total_variation(policy, reference);
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

int run_report(const Options & opt)
{
  std::ifstream in(opt.scores);
  if (!in) {
    std::cerr << "cannot open " << opt.scores << '\n';
    return kExitSchema;
  }
  std::vector<RecordScore> scores;
  try {
    scores = read_scores(in);
  } catch (const std::exception & e) {
    std::cerr << opt.scores << ": " << e.what() << '\n';
    return kExitSchema;
  }
  const auto format = opt.format == "delimited" ? ReportFormat::delimited : ReportFormat::table;
  std::cout << emit_report(scores, format);
  return kExitOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Verifiable rewards and evaluation metrics for trajectory and affordance outputs"};
  app.require_subcommand(1);
  Options opt;

  const std::vector<std::string> kinds = {"affordance", "trajectory"};

  auto * score = app.add_subcommand("score", "Score prediction records and write per-record scores");
  score->add_option("--kind", opt.kind, "Only accept records of this kind")
    ->check(CLI::IsMember(kinds));
  score->add_option("--input", opt.input, "Line-delimited JSON records")->required()
    ->check(CLI::ExistingFile);
  score->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  score->add_option("--resample-k", opt.resample_k, "RMSE resample count (default 50)");
  score->add_option("--tau", opt.tau, "IoU threshold for affordance success (default 0.5)");
  score->add_option(
    "--penalty-distance", opt.penalty_distance, "Distance assigned to unparseable predictions");
  score->add_flag("--segment-hausdorff", opt.segment_hausdorff,
    "Measure Hausdorff against polyline segments");
  score->add_option("--out", opt.out, "Per-record score file")->required();

  auto * reward = app.add_subcommand("reward", "Print per-record composite rewards");
  reward->add_option("--kind", opt.kind, "Only accept records of this kind")
    ->check(CLI::IsMember(kinds));
  reward->add_option("--input", opt.input, "Line-delimited JSON records")->required()
    ->check(CLI::ExistingFile);
  reward->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);

  auto * train_toy = app.add_subcommand("train-toy", "Train the toy waypoint policy with GRPO");
  train_toy->add_option("--iters", opt.iters, "Iterations")->capture_default_str();
  train_toy->add_option("--group-size", opt.group_size, "Outputs per group")->capture_default_str();
  train_toy->add_option("--clip-eps", opt.clip_eps, "Ratio clip range")->capture_default_str();
  train_toy->add_option("--kl-beta", opt.kl_beta, "KL penalty weight")->capture_default_str();
  train_toy->add_option("--step-size", opt.step_size, "Gradient step size")->capture_default_str();
  train_toy->add_option("--updates-per-iter", opt.updates_per_iter, "Gradient steps per batch")
    ->capture_default_str();
  train_toy->add_option("--horizon", opt.horizon, "Tokens per output")->capture_default_str();
  train_toy->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
  train_toy->add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  train_toy->add_option("--out", opt.out, "Training log (CSV)")->required();

  auto * report = app.add_subcommand("report", "Summarize a score file");
  report->add_option("--scores", opt.scores, "Score file written by `score`")->required();
  report->add_option("--format", opt.format, "Output format")
    ->check(CLI::IsMember({"table", "delimited"}))
    ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*score) {
      return run_score(opt, *score);
    }
    if (*reward) {
      return run_reward(opt, *reward);
    }
    if (*train_toy) {
      return run_train_toy(opt);
    }
    return run_report(opt);
  } catch (const ConfigError & e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSchema;
  }
}
