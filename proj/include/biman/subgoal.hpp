#pragma once

#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace biman
{

enum class Verb
{
  Acquire,
  PlaceInto,
  Open,
  Close,
  Press,
  PourInto,
  DiscardInto,
  OperateWithHeld
};

std::string_view to_string(Verb v);
std::optional<Verb> parse_verb(std::string_view s);
bool verb_needs_target(Verb v);

/// For verbs with a target, `subject` is the held item and `target` is the
/// object the agent walks to.
struct Intent
{
  Verb verb = Verb::Acquire;
  std::string subject;
  std::optional<std::string> target;
};

struct StateGoal
{
  std::optional<int> point_id;
  std::optional<std::string> object_label;
  std::string tag;
};

struct LocatedGoal
{
  std::string object_label;
  int at_point_id = 0;
  double radius = 0.0;
};

struct HeldGoal
{
  std::string object_label;
};

using GoalPredicate = std::variant<StateGoal, LocatedGoal, HeldGoal>;

struct TaskSpec
{
  std::string name;
  std::vector<Intent> intents;
  std::vector<GoalPredicate> goal_predicates;
  /// Scene file named by the task, relative to the task file.
  std::optional<std::filesystem::path> scene_path;
};

TaskSpec load_task(const std::filesystem::path& file);
TaskSpec parse_task(std::string_view json_text);

struct SubgoalTriplet
{
  int object_point = 0;
  std::string goal_text;
  std::string abstract_skill;
  std::set<std::string> holds_required;
  std::set<std::string> holds_established;
  std::set<std::string> holds_released;
  /// Object points of the original (unmerged) triplets folded into this one.
  std::vector<int> origin_points;
  /// Object labels the subgoal talks about; used to focus point binding.
  std::vector<std::string> focus_labels;
  /// Hands needed by the abstract skill, 0 while unknown.
  int hand_demand = 0;

  bool merged() const { return origin_points.size() > 1; }
};

struct PlanStep
{
  int object_point = 0;
  std::string goal_text;
  std::string best_skill;
  std::vector<std::string> focus_labels;
  std::set<std::string> holds_required;
  std::vector<int> origin_points;
};

struct RefinedPlanSkeleton
{
  std::vector<PlanStep> sequence;
};

/// Case-insensitive exact label match (lowest id), then longest-substring fallback.
std::optional<int> resolve_label(const SceneDocument& scene, std::string_view label);

std::vector<SubgoalTriplet> generate_subgoals(const TaskSpec& task, const SceneDocument& scene,
                                              const AdjacencyGraph& adjacency);

/// 2 when the best-matching skill for the abstract text coordinates two hands on one object.
int hand_demand(const SubgoalTriplet& t, const KnowledgeBase& kb);

/// Minimax anchor over object points equal or adjacent to every id in `origins`.
std::optional<int> merge_anchor(const std::vector<int>& origins, const SceneDocument& scene,
                                const AdjacencyGraph& adjacency);

/// Merge conditions for consecutive triplets `a` then `b`; `check_holds` toggles condition (c).
bool can_merge(const SubgoalTriplet& a, const SubgoalTriplet& b, const AdjacencyGraph& adjacency,
               const KnowledgeBase& kb, bool check_holds);

SubgoalTriplet merge_pair(const SubgoalTriplet& a, const SubgoalTriplet& b, int anchor,
                          const KnowledgeBase& kb);

std::vector<SubgoalTriplet> merge_subgoals(std::vector<SubgoalTriplet> triplets, const SceneDocument& scene,
                                           const AdjacencyGraph& adjacency, const KnowledgeBase& kb);

/// With `allow_merge` false only the satisfiability check runs.
std::vector<SubgoalTriplet> resolve_continuity(std::vector<SubgoalTriplet> triplets,
                                               const SceneDocument& scene, const AdjacencyGraph& adjacency,
                                               const KnowledgeBase& kb, bool allow_merge = true);

/// Linear scan: every required hold was established earlier and not released since.
bool continuity_holds(const std::vector<SubgoalTriplet>& triplets);

struct RefineOptions
{
  int candidates = 10;
};

/// Feasibility of `entry` for the triplet; returns the failed condition or nullopt.
std::optional<std::string> refine_rejection(const SkillEntry& entry, const SubgoalTriplet& triplet,
                                            const std::set<std::string>& carried, const SceneDocument& scene,
                                            const AdjacencyGraph& adjacency);

RefinedPlanSkeleton refine_best_skill(const std::vector<SubgoalTriplet>& triplets, const KnowledgeBase& kb,
                                      const SceneDocument& scene, const AdjacencyGraph& adjacency,
                                      const RefineOptions& options = {});

}  // namespace biman
