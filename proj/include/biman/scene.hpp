#pragma once

#include "biman/types.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace biman
{

/// Deterministic state transition attached to an interaction point.
struct EffectRule
{
  HandPrimitive primitive = HandPrimitive::Idle;
  TagSet required_state;
  TagSet removes;
  TagSet adds;
};

struct Descriptor
{
  std::string part_label;
  TagSet visual_attributes;
  TagSet affordances;
  std::set<int> sibling_ids;
  TagSet state_tags;
  std::vector<EffectRule> effects;
};

struct ObjectPoint
{
  int id = 0;
  Vec3 position;
  std::string label;
};

struct InteractionPoint
{
  int id = 0;
  Vec3 position;
  Descriptor descriptor;
  int parent_object = 0;
};

struct Box
{
  Vec3 min;
  Vec3 max;
};

struct SceneDocument
{
  std::string scene_label;
  std::vector<std::string> command_list;
  std::vector<ObjectPoint> object_points;       // sorted by id
  std::vector<InteractionPoint> interaction_points;  // sorted by id
  std::vector<Box> obstacles;
  std::map<std::string, std::string> metadata;
  std::optional<Pose> agent_start;
  std::vector<std::string> warnings;

  const ObjectPoint* object(int id) const;
  const InteractionPoint* point(int id) const;
  ObjectPoint& object_mut(int id);
  InteractionPoint& point_mut(int id);
  /// Interaction points whose parent is `object_id`, ascending id.
  std::vector<const InteractionPoint*> points_of(int object_id) const;
};

struct AdjacencyGraph
{
  std::set<std::pair<int, int>> edges;  // (lo, hi), lo < hi
  double threshold = 0.0;

  bool adjacent(int a, int b) const;
  /// True when a == b or the pair is an edge.
  bool same_or_adjacent(int a, int b) const { return a == b || adjacent(a, b); }
};

struct ReachablePoint
{
  const InteractionPoint* point = nullptr;
  Zone zone = Zone::Mid;
  double lateral = 0.0;  // agent-frame lateral offset, + is left
};

inline constexpr double kDefaultAdjacencyThreshold = 1.2;
inline constexpr double kDefaultReachThreshold = 1.0;
inline constexpr double kZoneHalfWidth = 0.15;

SceneDocument load_scene(const std::filesystem::path& file);
SceneDocument parse_scene(std::string_view json_text);

/// All-pairs construction, parallelised over the outer index.
AdjacencyGraph build_adjacency(const SceneDocument& scene, double threshold);
/// Single-threaded reference kept for tests and the benchmark.
AdjacencyGraph build_adjacency_serial(const SceneDocument& scene, double threshold);

/// Signed lateral offset of `point` in the agent frame, positive to the agent's left.
double lateral_offset(const Vec3& point, const Pose& stance);
Zone assign_zone(const Vec3& point_position, const Pose& stance);

std::vector<ReachablePoint> sample_reachable(const SceneDocument& scene, const Pose& stance,
                                             double reach_threshold);

std::string concat_descriptors(const SceneDocument& scene, std::vector<ReachablePoint> points);

}  // namespace biman
