#include "biman/harness.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace
{

void add_common(CLI::App& cmd, biman::RunConfig& config, std::string& scene, std::string& kb,
                std::vector<std::string>& ablations, std::string& out)
{
  cmd.add_option("--scene", scene, "scene file (overrides the task's scene)");
  cmd.add_option("--task", config.task_path, "task file, or a task directory for eval")->required();
  cmd.add_option("--kb", kb, "skill knowledge base (default: $BIMAN_KB)");
  cmd.add_option("--adjacency-threshold", config.adjacency_threshold, "object adjacency distance in meters")
    ->check(CLI::PositiveNumber);
  cmd.add_option("--reach-threshold", config.reach_threshold, "arm reach in meters")->check(CLI::PositiveNumber);
  cmd.add_option("--grid-resolution", config.grid_resolution, "navigation cell size in meters")
    ->check(CLI::PositiveNumber);
  cmd.add_option("--ablate", ablations, "no-merge | no-skill-rag | no-descriptors")
    ->check(CLI::IsMember({"no-merge", "no-skill-rag", "no-descriptors"}));
  cmd.add_option("--trials", config.trials, "trials per task")->check(CLI::PositiveNumber);
  cmd.add_option("--out", out, "output directory");
  cmd.add_option("--seed", config.seed, "seed for randomized backends");
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Bimanual task planner"};
  app.require_subcommand(1);

  biman::RunConfig config;
  std::string scene;
  std::string kb;
  std::string out;
  std::vector<std::string> ablations;

  auto* plan = app.add_subcommand("plan", "plan and simulate one task");
  auto* eval = app.add_subcommand("eval", "evaluate every task in a directory");
  add_common(*plan, config, scene, kb, ablations, out);
  add_common(*eval, config, scene, kb, ablations, out);

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::CallForHelp& e)
  {
    return app.exit(e);
  }
  catch (const CLI::ParseError& e)
  {
    app.exit(e);
    return 1;
  }

  if (!scene.empty())
  {
    config.scene_path = scene;
  }
  if (!out.empty())
  {
    config.output_path = out;
  }
  if (kb.empty())
  {
    if (const char* env = std::getenv("BIMAN_KB"))
    {
      kb = env;
    }
  }
  if (kb.empty())
  {
    std::cerr << R"({"error":{"kind":"input","message":"no knowledge base: pass --kb or set BIMAN_KB"}})" << '\n';
    return 1;
  }
  config.kb_path = kb;
  for (const auto& a : ablations)
  {
    config.ablations.insert(*biman::parse_ablation(a));
  }

  if (plan->parsed())
  {
    return biman::cmd_plan(config, std::cout, std::cerr);
  }
  return biman::cmd_eval(config, std::cout, std::cerr);
}
