#include "biman/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace biman
{

std::optional<Ablation> parse_ablation(std::string_view s)
{
  if (s == "no-merge")
  {
    return Ablation::NoMerge;
  }
  if (s == "no-skill-rag")
  {
    return Ablation::NoSkillRag;
  }
  if (s == "no-descriptors")
  {
    return Ablation::NoDescriptors;
  }
  return std::nullopt;
}

std::string_view to_string(Ablation a)
{
  switch (a)
  {
    case Ablation::NoMerge: return "no-merge";
    case Ablation::NoSkillRag: return "no-skill-rag";
    case Ablation::NoDescriptors: return "no-descriptors";
  }
  return "";
}

TrialConfig RunConfig::trial_config() const
{
  TrialConfig c;
  c.adjacency_threshold = adjacency_threshold;
  c.reach_threshold = reach_threshold;
  c.grid_resolution = grid_resolution;
  c.merge = !ablations.count(Ablation::NoMerge);
  c.skill_rag = !ablations.count(Ablation::NoSkillRag);
  c.descriptors = !ablations.count(Ablation::NoDescriptors);
  return c;
}

void RunConfig::validate() const
{
  if (!(adjacency_threshold > 0.0) || !(reach_threshold > 0.0) || !(grid_resolution > 0.0))
  {
    throw std::invalid_argument("thresholds and grid resolution must be positive");
  }
  if (trials < 1)
  {
    throw std::invalid_argument("trials must be at least 1");
  }
}

// ---------------------------------------------------------------------------
// serialization

namespace
{

json action_json(const HandAction& a)
{
  json j;
  j["primitive"] = std::string(to_string(a.primitive));
  j["point"] = a.point ? json(*a.point) : json(nullptr);
  j["reason"] = a.reason;
  return j;
}

json violation_json(const Violation& v)
{
  json j;
  j["kind"] = std::string(to_string(v.kind));
  j["tuple_index"] = v.tuple_index;
  j["hand"] = v.hand ? json(std::string(to_string(*v.hand))) : json(nullptr);
  j["detail"] = v.detail;
  return j;
}

double round6(double v) { return std::round(v * 1e6) / 1e6; }

}  // namespace

json plan_to_json(const TrialReport& report, const OccupancyGrid*)
{
  json plan;
  plan["schema"] = "plan.v1";
  plan["task"] = report.task;
  json steps = json::array();
  for (const auto& s : report.subgoals)
  {
    json step;
    step["subgoal_index"] = s.index;
    step["object_point"] = s.object_point;
    step["goal_text"] = s.goal_text;
    step["best_skill"] = s.best_skill;
    step["stance"] = {{"position", json::array({round6(s.stance.position.x), round6(s.stance.position.y),
                                                round6(s.stance.position.z)})},
                      {"yaw", round6(s.stance.yaw)}};
    json cells = json::array();
    for (const auto& c : s.navigation.cells)
    {
      cells.push_back(json::array({c.x, c.y}));
    }
    step["navigation"] = {{"cells", cells}, {"length_m", round6(s.navigation.length)}};
    json tuples = json::array();
    for (const auto& t : s.actions.tuples)
    {
      tuples.push_back({{"right", action_json(t.right)}, {"left", action_json(t.left)}});
    }
    step["actions"] = {{"skill_used", s.actions.skill_used}, {"reversed", s.actions.reversed}, {"tuples", tuples}};
    steps.push_back(std::move(step));
  }
  plan["steps"] = std::move(steps);
  return plan;
}

json report_to_json(const TrialReport& report, const RunConfig& config)
{
  json j;
  j["schema"] = "report.v1";
  j["task"] = report.task;
  j["success"] = report.success;
  j["goal_met"] = report.goal_met;
  j["operation_count"] = report.operation_count;
  j["path_length_m"] = round6(report.path_length);
  json abl = json::array();
  for (auto a : config.ablations)
  {
    abl.push_back(std::string(to_string(a)));
  }
  j["ablations"] = abl;
  json viol = json::array();
  for (const auto& v : report.violations)
  {
    viol.push_back(violation_json(v));
  }
  j["violations"] = viol;
  json subs = json::array();
  for (const auto& s : report.subgoals)
  {
    subs.push_back({{"index", s.index},
                    {"object_point", s.object_point},
                    {"goal_text", s.goal_text},
                    {"best_skill", s.best_skill},
                    {"operation_count", s.actions.tuples.size()},
                    {"path_length_m", round6(s.navigation.length)}});
  }
  j["subgoals"] = subs;
  if (report.error)
  {
    j["error"] = {{"stage", report.error->stage}, {"kind", report.error->kind}, {"message", report.error->message}};
  }
  else
  {
    j["error"] = nullptr;
  }
  return j;
}

// ---------------------------------------------------------------------------
// commands

namespace
{

void write_text(const std::filesystem::path& file, const std::string& text)
{
  if (file.has_parent_path())
  {
    std::error_code ec;
    std::filesystem::create_directories(file.parent_path(), ec);
    if (ec)
    {
      throw Error(Error::Kind::Io, "cannot create " + file.parent_path().string() + ": " + ec.message(),
                  file.parent_path().string());
    }
  }
  std::ofstream out(file, std::ios::binary);
  if (!out)
  {
    throw Error(Error::Kind::Io, "cannot write " + file.string(), file.string());
  }
  out << text;
}

void report_error(std::ostream& err, std::string_view kind, const std::string& message)
{
  json j;
  j["error"] = {{"kind", std::string(kind)}, {"message", message}};
  err << j.dump() << '\n';
}

SceneDocument scene_for(const RunConfig& config, const TaskSpec& task)
{
  if (config.scene_path)
  {
    return load_scene(*config.scene_path);
  }
  if (task.scene_path)
  {
    return load_scene(*task.scene_path);
  }
  throw Error(Error::Kind::Io, "no scene given: pass --scene or name one in the task file");
}

}  // namespace

int cmd_plan(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  SceneDocument scene;
  TaskSpec task;
  KnowledgeBase kb;
  try
  {
    config.validate();
    task = load_task(config.task_path);
    scene = scene_for(config, task);
    kb = load_kb(config.kb_path);
  }
  catch (const Error& e)
  {
    report_error(err, to_string(e.kind()), e.what());
    return 1;
  }
  catch (const std::exception& e)
  {
    report_error(err, "input", e.what());
    return 1;
  }

  for (const auto& w : scene.warnings)
  {
    err << "warning: " << w << '\n';
  }

  const TrialReport report = run_trial(scene, task, kb, config.trial_config());
  const json plan = plan_to_json(report);
  const json rep = report_to_json(report, config);
  try
  {
    if (config.output_path)
    {
      write_text(*config.output_path / "plan.json", plan.dump(2) + "\n");
      write_text(*config.output_path / "report.json", rep.dump(2) + "\n");
      out << report.task << ": " << (report.success ? "success" : "failure")
          << ", operations " << report.operation_count << '\n';
    }
    else
    {
      out << json{{"plan", plan}, {"report", rep}}.dump(2) << '\n';
    }
  }
  catch (const Error& e)
  {
    report_error(err, to_string(e.kind()), e.what());
    return 1;
  }

  if (report.error)
  {
    report_error(err, report.error->kind, report.error->message);
  }
  return report.success && report.violations.empty() ? 0 : 2;
}

std::vector<std::filesystem::path> collect_task_files(const std::filesystem::path& path)
{
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_regular_file(path))
  {
    files.push_back(path);
    return files;
  }
  if (!std::filesystem::is_directory(path))
  {
    throw Error(Error::Kind::Io, "task path not found: " + path.string(), path.string());
  }
  for (const auto& entry : std::filesystem::directory_iterator(path))
  {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
    {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

EvalSummary run_eval(const RunConfig& config)
{
  config.validate();
  const auto files = collect_task_files(config.task_path);
  if (files.empty())
  {
    throw Error(Error::Kind::Io, "no task files under " + config.task_path.string(), config.task_path.string());
  }
  const KnowledgeBase kb = load_kb(config.kb_path);
  const TrialConfig trial = config.trial_config();

  struct Job
  {
    TaskSpec task;
    SceneDocument scene;
    std::optional<std::string> load_error;
  };
  std::vector<Job> jobs(files.size());
  for (size_t i = 0; i < files.size(); ++i)
  {
    try
    {
      jobs[i].task = load_task(files[i]);
      jobs[i].scene = scene_for(config, jobs[i].task);
    }
    catch (const std::exception& e)
    {
      jobs[i].task.name = files[i].stem().string();
      jobs[i].load_error = e.what();
    }
  }

  const long n_runs = static_cast<long>(jobs.size()) * config.trials;
  std::vector<TrialReport> reports(static_cast<size_t>(n_runs));

#pragma omp parallel for schedule(dynamic)
  for (long r = 0; r < n_runs; ++r)
  {
    const auto& job = jobs[static_cast<size_t>(r / config.trials)];
    if (!job.load_error)
    {
      reports[static_cast<size_t>(r)] = run_trial(job.scene, job.task, kb, trial);
    }
  }

  EvalSummary summary;
  int total_success = 0;
  int total_trials = 0;
  double op_sum = 0.0;
  int op_tasks = 0;
  for (size_t i = 0; i < jobs.size(); ++i)
  {
    TaskSummary ts;
    ts.task = jobs[i].task.name;
    ts.trials = config.trials;
    ts.error = jobs[i].load_error;
    double ops = 0.0;
    for (int t = 0; t < config.trials; ++t)
    {
      const auto& rep = reports[i * static_cast<size_t>(config.trials) + static_cast<size_t>(t)];
      if (jobs[i].load_error)
      {
        continue;
      }
      ts.operation_counts.push_back(rep.operation_count);
      if (rep.success)
      {
        ++ts.successes;
        ops += rep.operation_count;
      }
      else if (!ts.error && rep.error)
      {
        ts.error = rep.error->stage + ": " + rep.error->message;
      }
    }
    ts.mean_operations = ts.successes ? ops / ts.successes : 0.0;
    total_success += ts.successes;
    total_trials += ts.trials;
    if (ts.successes)
    {
      op_sum += ts.mean_operations;
      ++op_tasks;
    }
    summary.tasks.push_back(std::move(ts));
  }
  std::sort(summary.tasks.begin(), summary.tasks.end(),
            [](const TaskSummary& a, const TaskSummary& b) { return a.task < b.task; });
  summary.success_rate = total_trials ? 100.0 * total_success / total_trials : 0.0;
  summary.mean_operations = op_tasks ? op_sum / op_tasks : 0.0;
  return summary;
}

json summary_to_json(const EvalSummary& summary, const RunConfig& config)
{
  json j;
  j["schema"] = "eval.v1";
  json abl = json::array();
  for (auto a : config.ablations)
  {
    abl.push_back(std::string(to_string(a)));
  }
  j["ablations"] = abl;
  json tasks = json::array();
  for (const auto& t : summary.tasks)
  {
    tasks.push_back({{"task", t.task},
                     {"trials", t.trials},
                     {"successes", t.successes},
                     {"mean_operations", round6(t.mean_operations)},
                     {"operation_counts", t.operation_counts},
                     {"error", t.error ? json(*t.error) : json(nullptr)}});
  }
  j["tasks"] = tasks;
  j["success_rate_percent"] = round6(summary.success_rate);
  j["mean_operations"] = round6(summary.mean_operations);
  return j;
}

std::string summary_table(const EvalSummary& summary)
{
  size_t width = std::string("Task").size();
  for (const auto& t : summary.tasks)
  {
    width = std::max(width, t.task.size());
  }
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "Task" << "  " << std::right << std::setw(9) << "Succ."
      << "  " << std::setw(6) << "Op." << '\n';
  out << std::string(width + 19, '-') << '\n';
  for (const auto& t : summary.tasks)
  {
    std::ostringstream succ;
    succ << t.successes << '/' << t.trials;
    out << std::left << std::setw(static_cast<int>(width)) << t.task << "  " << std::right << std::setw(9)
        << succ.str() << "  " << std::setw(6) << std::fixed << std::setprecision(2) << t.mean_operations << '\n';
  }
  out << std::string(width + 19, '-') << '\n';
  std::ostringstream rate;
  rate << std::fixed << std::setprecision(2) << summary.success_rate << '%';
  out << std::left << std::setw(static_cast<int>(width)) << "Average" << "  " << std::right << std::setw(9)
      << rate.str() << "  " << std::setw(6) << std::fixed << std::setprecision(2) << summary.mean_operations
      << '\n';
  return out.str();
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& err)
{
  EvalSummary summary;
  try
  {
    summary = run_eval(config);
  }
  catch (const Error& e)
  {
    report_error(err, to_string(e.kind()), e.what());
    return 1;
  }
  catch (const std::exception& e)
  {
    report_error(err, "input", e.what());
    return 1;
  }

  const std::string table = summary_table(summary);
  out << table;
  if (config.output_path)
  {
    try
    {
      write_text(*config.output_path / "eval.json", summary_to_json(summary, config).dump(2) + "\n");
      write_text(*config.output_path / "eval.txt", table);
    }
    catch (const Error& e)
    {
      report_error(err, to_string(e.kind()), e.what());
      return 1;
    }
  }
  const bool all = std::all_of(summary.tasks.begin(), summary.tasks.end(),
                               [](const TaskSummary& t) { return t.successes == t.trials; });
  return all ? 0 : 2;
}

}  // namespace biman
