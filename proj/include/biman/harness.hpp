#pragma once

#include "biman/json_util.hpp"
#include "biman/world.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace biman
{

enum class Ablation
{
  NoMerge,
  NoSkillRag,
  NoDescriptors
};

std::optional<Ablation> parse_ablation(std::string_view s);
std::string_view to_string(Ablation a);

struct RunConfig
{
  std::optional<std::filesystem::path> scene_path;
  std::filesystem::path task_path;  // file for plan, directory (or file) for eval
  std::filesystem::path kb_path;
  double adjacency_threshold = kDefaultAdjacencyThreshold;
  double reach_threshold = kDefaultReachThreshold;
  double grid_resolution = 0.1;
  std::set<Ablation> ablations;
  int trials = 1;
  std::optional<std::filesystem::path> output_path;
  unsigned seed = 0;  // reserved for randomized backends

  TrialConfig trial_config() const;
  /// Throws std::invalid_argument on non-positive thresholds or trials.
  void validate() const;
};

json plan_to_json(const TrialReport& report, const OccupancyGrid* grid = nullptr);
json report_to_json(const TrialReport& report, const RunConfig& config);

struct TaskSummary
{
  std::string task;
  int trials = 0;
  int successes = 0;
  double mean_operations = 0.0;  // over successful trials
  std::vector<int> operation_counts;
  std::optional<std::string> error;
};

struct EvalSummary
{
  std::vector<TaskSummary> tasks;  // sorted by task name
  double success_rate = 0.0;       // percent over all trials
  double mean_operations = 0.0;    // over tasks with at least one success
};

/// Task files (*.json) under `path`, sorted; a plain file yields itself.
std::vector<std::filesystem::path> collect_task_files(const std::filesystem::path& path);

EvalSummary run_eval(const RunConfig& config);
json summary_to_json(const EvalSummary& summary, const RunConfig& config);
std::string summary_table(const EvalSummary& summary);

/// Exit codes: 0 success without violations, 1 input error, 2 planning failure.
int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace biman
