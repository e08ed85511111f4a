#pragma once

#include "biman/bimanual.hpp"
#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"
#include "biman/subgoal.hpp"

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace biman
{

struct Cell
{
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

/// 2D occupancy over the scene footprint. Obstacle boxes are projected onto
/// the floor and inflated by the agent radius.
class OccupancyGrid
{
public:
  OccupancyGrid(int width, int height, double resolution = 0.1, Vec3 origin = {});
  static OccupancyGrid from_scene(const SceneDocument& scene, double resolution = 0.1, double agent_radius = 0.3,
                                  double margin = 1.0);

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  const Vec3& origin() const { return origin_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool blocked(Cell c) const { return blocked_[index(c)] != 0; }
  void set_blocked(Cell c, bool value = true) { blocked_[index(c)] = value ? 1 : 0; }
  int index(Cell c) const { return c.y * width_ + c.x; }
  Cell cell_at(int index) const { return {index % width_, index / width_}; }

  Cell cell_of(const Vec3& p) const;
  Vec3 center(Cell c) const;

private:
  int width_;
  int height_;
  double resolution_;
  Vec3 origin_;
  std::vector<unsigned char> blocked_;
};

struct GridPath
{
  std::vector<Cell> cells;
  double cost = 0.0;  // in cells: straight 1, diagonal sqrt(2)
};

/// 8-connected A* with the octile heuristic; diagonal moves may not cut a
/// blocked corner. Returns nullopt when the goal is unreachable and throws
/// std::invalid_argument when start or goal is blocked or out of bounds.
std::optional<GridPath> plan_path(const OccupancyGrid& grid, Cell start, Cell goal);

inline constexpr double kStanceRadius = 0.8;

Pose select_stance(const OccupancyGrid& grid, const ObjectPoint& object, double max_distance = kStanceRadius);

struct ObjectLocation
{
  enum class Kind
  {
    Origin,  // resting at its own object point
    AtPoint,
    InsidePoint,
    InHand
  };
  Kind kind = Kind::Origin;
  int point = 0;
  Hand hand = Hand::Right;
};

struct WorldState
{
  Pose agent;
  HandState hands;
  std::map<int, TagSet> point_states;
  std::map<int, ObjectLocation> object_locations;  // keyed by object point id
  std::vector<std::string> completed_goals;

  static WorldState initial(const SceneDocument& scene, const Pose& agent);
  /// Union of state tags over the points of one object.
  TagSet object_state(const SceneDocument& scene, int object_id) const;
};

/// Scene with point states and positions reflecting `state`; held objects sit at the agent.
SceneDocument current_view(const SceneDocument& scene, const WorldState& state);

/// Descriptor stripping used by the no-descriptors ablation.
SceneDocument strip_descriptors(SceneDocument scene);

/// A tuple that cannot be executed.
class ExecutionError : public Error
{
public:
  explicit ExecutionError(Violation v)
    : Error(Kind::Generation, describe(v)), violation_(std::move(v))
  {
  }
  const Violation& violation() const { return violation_; }

private:
  Violation violation_;
};

std::variant<WorldState, Violation> execute_tuple(const WorldState& state, const BimanualTuple& tuple,
                                                  const SceneDocument& scene, double reach_threshold,
                                                  int tuple_index = 0);

/// Executes `sequence` and records `subgoal` as completed. Throws ExecutionError.
WorldState update_world(const WorldState& state, const ActionSequence& sequence, const std::string& subgoal,
                        const SceneDocument& scene, double reach_threshold);

/// Throws Error(Evaluation) when a predicate references something unknown.
bool evaluate_goal(const TaskSpec& task, const WorldState& state, const SceneDocument& scene);

struct TrialConfig
{
  double adjacency_threshold = kDefaultAdjacencyThreshold;
  double reach_threshold = kDefaultReachThreshold;
  double grid_resolution = 0.1;
  double agent_radius = 0.3;
  bool merge = true;
  bool skill_rag = true;
  bool descriptors = true;
};

struct NavigationSegment
{
  std::vector<Cell> cells;
  double length = 0.0;  // meters
};

struct SubgoalRecord
{
  int index = 0;
  int object_point = 0;
  std::string goal_text;
  std::string best_skill;
  Pose stance;
  NavigationSegment navigation;
  ActionSequence actions;
};

struct StageError
{
  std::string stage;
  std::string kind;
  std::string message;
};

struct TrialReport
{
  std::string task;
  bool success = false;
  bool goal_met = false;
  std::vector<Violation> violations;
  int operation_count = 0;
  double path_length = 0.0;
  std::vector<SubgoalRecord> subgoals;
  std::vector<SubgoalTriplet> triplets;  // continuity-resolved, before refinement
  std::optional<StageError> error;
  std::optional<WorldState> final_state;
};

TrialReport run_trial(const SceneDocument& scene, const TaskSpec& task, const KnowledgeBase& kb,
                      const TrialConfig& config = {});

}  // namespace biman
