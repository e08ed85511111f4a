#pragma once

#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"
#include "biman/subgoal.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace biman
{

struct HeldObject
{
  int object_id = 0;
  std::string label;
  friend bool operator==(const HeldObject&, const HeldObject&) = default;
};

struct HandState
{
  std::optional<HeldObject> right;
  std::optional<HeldObject> left;

  std::optional<HeldObject>& hand(Hand h) { return h == Hand::Right ? right : left; }
  const std::optional<HeldObject>& hand(Hand h) const { return h == Hand::Right ? right : left; }
  bool holding(Hand h) const { return hand(h).has_value(); }
  std::optional<Hand> hand_holding(int object_id) const;
  friend bool operator==(const HandState&, const HandState&) = default;
};

/// "free" or "holding <label>".
std::string describe(const std::optional<HeldObject>& held);

struct HandAction
{
  HandPrimitive primitive = HandPrimitive::Idle;
  std::optional<int> point;
  std::string reason;
};

struct BimanualTuple
{
  HandAction right;
  HandAction left;

  HandAction& hand(Hand h) { return h == Hand::Right ? right : left; }
  const HandAction& hand(Hand h) const { return h == Hand::Right ? right : left; }
};

struct ActionSequence
{
  std::vector<BimanualTuple> tuples;
  int subgoal_index = 0;
  std::string skill_used;
  bool reversed = false;
};

enum class ViolationKind
{
  HandState,
  Zone,
  Affordance,
  Binding,
  DuplicateTarget
};

std::string_view to_string(ViolationKind k);

struct Violation
{
  ViolationKind kind = ViolationKind::Binding;
  int tuple_index = 0;
  std::optional<Hand> hand;
  std::string detail;
};

std::string describe(const Violation& v);

/// Slot bound to a sampled point, or to the object already held by the using hand.
struct SlotBinding
{
  std::optional<int> point;
  bool held = false;
};

struct BindResult
{
  bool ok = false;
  bool reversed = false;
  std::map<std::string, SlotBinding> slots;
  std::string failure;
};

struct BindOptions
{
  /// When non-empty, candidate points must belong to an object named here.
  std::vector<std::string> focus_labels;
};

/// Lateral position of each hand's shoulder in the agent frame (m).
inline constexpr double kShoulderOffset = 0.2;

BindResult bind_prototype(const SkillEntry& entry, const std::vector<ReachablePoint>& points,
                          const HandState& hands, const SceneDocument& scene, const BindOptions& options = {});

struct GenerateOptions
{
  /// Off reproduces planning without retrieved prototypes.
  bool skill_rag = true;
  int prototypes = 2;
};

/// Primitives compatible with an affordance tag on the target point.
bool primitive_compatible(HandPrimitive primitive, const TagSet& affordances);

ActionSequence generate_tuples(const PlanStep& step, const HandState& hands,
                               const std::vector<ReachablePoint>& points, const KnowledgeBase& kb,
                               const SceneDocument& scene, const GenerateOptions& options = {});

/// Replays hand state through `seq` and reports every rule broken.
std::vector<Violation> validate_sequence(const ActionSequence& seq, const HandState& hands,
                                         const std::map<int, ReachablePoint>& points_by_id,
                                         const SceneDocument& scene);

std::map<int, ReachablePoint> index_points(const std::vector<ReachablePoint>& points);

/// Hand state after applying one tuple's grasp/put/release effects.
HandState advance_hands(HandState hands, const BimanualTuple& tuple, const SceneDocument& scene);

}  // namespace biman
