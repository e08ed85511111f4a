#include "biman/bimanual.hpp"

#include "biman/matching.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace biman
{

std::optional<Hand> HandState::hand_holding(int object_id) const
{
  for (Hand h : kHands)
  {
    if (hand(h) && hand(h)->object_id == object_id)
    {
      return h;
    }
  }
  return std::nullopt;
}

std::string describe(const std::optional<HeldObject>& held)
{
  return held ? "holding " + held->label : std::string("free");
}

std::string_view to_string(ViolationKind k)
{
  switch (k)
  {
    case ViolationKind::HandState: return "hand-state";
    case ViolationKind::Zone: return "zone";
    case ViolationKind::Affordance: return "affordance";
    case ViolationKind::Binding: return "binding";
    case ViolationKind::DuplicateTarget: return "duplicate-target";
  }
  return "binding";
}

std::string describe(const Violation& v)
{
  std::ostringstream out;
  out << to_string(v.kind) << " @tuple " << v.tuple_index;
  if (v.hand)
  {
    out << " (" << to_string(*v.hand) << ")";
  }
  out << ": " << v.detail;
  return out.str();
}

bool primitive_compatible(HandPrimitive primitive, const TagSet& aff)
{
  switch (primitive)
  {
    case HandPrimitive::Grasp: return aff.count("grab") > 0;
    case HandPrimitive::Put: return aff.count("put-on") > 0 || aff.count("release-into") > 0;
    case HandPrimitive::Release: return aff.count("release-into") > 0;
    case HandPrimitive::Press: return aff.count("press") > 0;
    case HandPrimitive::Pull: return aff.count("pull") > 0;
    case HandPrimitive::Push: return aff.count("push") > 0;
    case HandPrimitive::Pour: return aff.count("pour-into") > 0;
    case HandPrimitive::Idle: return true;
  }
  return false;
}

std::map<int, ReachablePoint> index_points(const std::vector<ReachablePoint>& points)
{
  std::map<int, ReachablePoint> out;
  for (const auto& rp : points)
  {
    out.emplace(rp.point->id, rp);
  }
  return out;
}

HandState advance_hands(HandState hands, const BimanualTuple& tuple, const SceneDocument& scene)
{
  for (Hand h : kHands)
  {
    const auto& a = tuple.hand(h);
    if (!a.point)
    {
      continue;
    }
    if (a.primitive == HandPrimitive::Grasp)
    {
      const auto* p = scene.point(*a.point);
      if (p)
      {
        hands.hand(h) = HeldObject{p->parent_object, scene.object(p->parent_object)->label};
      }
    }
    else if (a.primitive == HandPrimitive::Put || a.primitive == HandPrimitive::Release)
    {
      hands.hand(h).reset();
    }
  }
  return hands;
}

// ---------------------------------------------------------------------------
// binding

namespace
{

bool zone_allows(Hand h, Zone z)
{
  return h == Hand::Left ? z != Zone::Right : z != Zone::Left;
}

double shoulder(Hand h) { return h == Hand::Left ? kShoulderOffset : -kShoulderOffset; }

bool focus_matches(std::string_view parent_label, const std::vector<std::string>& focus)
{
  if (focus.empty())
  {
    return true;
  }
  const std::string l = to_lower(parent_label);
  for (const auto& f : focus)
  {
    const std::string fl = to_lower(f);
    if (l == fl || l.find(fl) != std::string::npos || fl.find(l) != std::string::npos)
    {
      return true;
    }
  }
  return false;
}

/// Hands (after mirroring) that touch `slot` anywhere in the template.
std::vector<Hand> slot_users(const SkillEntry& entry, std::string_view slot, bool mirrored)
{
  std::vector<Hand> users;
  for (const auto& step : entry.tuple_template)
  {
    for (Hand h : kHands)
    {
      const auto& a = step.hand(h);
      const Hand actual = mirrored ? other(h) : h;
      if (a.slot && *a.slot == slot && std::find(users.begin(), users.end(), actual) == users.end())
      {
        users.push_back(actual);
      }
    }
  }
  return users;
}

/// First primitive applied to `slot` that `point` cannot legally take.
std::optional<std::string> action_rejection(const SkillEntry& entry, std::string_view slot, const InteractionPoint& point)
{
  const auto& d = point.descriptor;
  for (const auto& step : entry.tuple_template)
  {
    for (Hand h : kHands)
    {
      const auto& a = step.hand(h);
      if (!a.slot || *a.slot != slot)
      {
        continue;
      }
      const std::string prim(to_string(a.primitive));
      if (!primitive_compatible(a.primitive, d.affordances))
      {
        return "affordances do not admit " + prim;
      }
      if (a.primitive == HandPrimitive::Pull && !d.visual_attributes.count("hinged"))
      {
        return std::string("pull needs a hinged part");
      }
      if (a.primitive == HandPrimitive::Grasp && d.visual_attributes.count("wall-mounted"))
      {
        return std::string("wall-mounted parts cannot be grasped");
      }
    }
  }
  return std::nullopt;
}

BindResult try_bind(const SkillEntry& entry, const std::vector<ReachablePoint>& points, const HandState& hands,
                    const SceneDocument& scene, const BindOptions& options, bool mirrored)
{
  BindResult result;
  result.reversed = mirrored;
  std::ostringstream why;
  const std::string orientation = mirrored ? "mirrored" : "as written";

  if (!hands_meet(entry.hand_preconditions, hands.holding(Hand::Right), hands.holding(Hand::Left), mirrored))
  {
    why << "hand preconditions unmet " << orientation << " (right " << describe(hands.right) << ", left "
        << describe(hands.left) << ")";
    result.failure = why.str();
    return result;
  }

  struct SlotPlan
  {
    const PointTemplate* tmpl;
    std::vector<int> candidates;  // indices into `points`, best first
  };
  std::vector<SlotPlan> plans;

  for (const auto& tmpl : entry.point_preconditions)
  {
    const auto users = slot_users(entry, tmpl.slot, mirrored);
    if (grasp_only_slot(entry, tmpl.slot) && users.size() == 1 && hands.holding(users.front()))
    {
      result.slots[tmpl.slot] = SlotBinding{std::nullopt, true};
      continue;
    }

    SlotPlan plan{&tmpl, {}};
    std::ostringstream rejected;
    for (size_t i = 0; i < points.size(); ++i)
    {
      const auto& rp = points[i];
      const auto& label = scene.object(rp.point->parent_object)->label;
      std::optional<std::string> reject = template_rejection(tmpl, *rp.point, label);
      if (!reject && !focus_matches(label, options.focus_labels))
      {
        reject = "object '" + label + "' is not part of the subgoal";
      }
      if (!reject)
      {
        reject = action_rejection(entry, tmpl.slot, *rp.point);
      }
      if (!reject)
      {
        for (Hand h : users)
        {
          if (!zone_allows(h, rp.zone))
          {
            reject = std::string(to_string(h)) + " hand cannot reach " + std::string(to_string(rp.zone)) + " zone";
            break;
          }
        }
      }
      if (reject)
      {
        rejected << " point " << rp.point->id << ": " << *reject << ";";
        continue;
      }
      plan.candidates.push_back(static_cast<int>(i));
    }
    if (plan.candidates.empty())
    {
      why << "slot '" << tmpl.slot << "' (" << orientation << ") unsatisfiable:" << rejected.str();
      result.failure = why.str();
      return result;
    }

    auto score = [&](int idx) {
      double s = 0.0;
      for (Hand h : users)
      {
        s += std::abs(points[idx].lateral - shoulder(h));
      }
      return s;
    };
    std::stable_sort(plan.candidates.begin(), plan.candidates.end(), [&](int a, int b) {
      const double sa = score(a);
      const double sb = score(b);
      if (sa != sb)
      {
        return sa < sb;
      }
      return points[a].point->id < points[b].point->id;
    });
    plans.push_back(std::move(plan));
  }

  // depth-first search for distinct points, preferring better-ranked candidates
  std::vector<int> chosen(plans.size(), -1);
  std::set<int> used;
  std::function<bool(size_t)> search = [&](size_t k) {
    if (k == plans.size())
    {
      return true;
    }
    for (int idx : plans[k].candidates)
    {
      const int id = points[idx].point->id;
      if (used.count(id))
      {
        continue;
      }
      used.insert(id);
      chosen[k] = id;
      if (search(k + 1))
      {
        return true;
      }
      used.erase(id);
    }
    return false;
  };
  if (!search(0))
  {
    why << "no assignment of distinct points to all slots (" << orientation << ")";
    result.failure = why.str();
    return result;
  }
  for (size_t k = 0; k < plans.size(); ++k)
  {
    result.slots[plans[k].tmpl->slot] = SlotBinding{chosen[k], false};
  }
  result.ok = true;
  return result;
}

}  // namespace

BindResult bind_prototype(const SkillEntry& entry, const std::vector<ReachablePoint>& points,
                          const HandState& hands, const SceneDocument& scene, const BindOptions& options)
{
  BindResult written = try_bind(entry, points, hands, scene, options, false);
  if (written.ok || !entry.hand_preconditions.reversible)
  {
    return written;
  }
  BindResult mirrored = try_bind(entry, points, hands, scene, options, true);
  if (mirrored.ok)
  {
    return mirrored;
  }
  mirrored.failure = written.failure + "; " + mirrored.failure;
  return mirrored;
}

// ---------------------------------------------------------------------------
// generation

namespace
{

std::string reason_for(Hand h, const HandState& hands, const HandAction& a)
{
  std::string r = std::string(to_string(h)) + " is " + describe(hands.hand(h));
  if (a.primitive == HandPrimitive::Idle || !a.point)
  {
    return r + "; idle";
  }
  return r + "; point " + std::to_string(*a.point) + " affords " + std::string(to_string(a.primitive));
}

void fill_reasons(ActionSequence& seq, HandState hands, const SceneDocument& scene)
{
  for (auto& t : seq.tuples)
  {
    for (Hand h : kHands)
    {
      t.hand(h).reason = reason_for(h, hands, t.hand(h));
    }
    hands = advance_hands(hands, t, scene);
  }
}

ActionSequence instantiate(const SkillEntry& entry, const BindResult& binding, const HandState& hands,
                           const SceneDocument& scene)
{
  ActionSequence seq;
  seq.skill_used = entry.name;
  seq.reversed = binding.reversed;
  for (const auto& step : entry.tuple_template)
  {
    BimanualTuple t;
    for (Hand h : kHands)
    {
      const auto& a = step.hand(binding.reversed ? other(h) : h);
      if (a.primitive == HandPrimitive::Idle)
      {
        continue;
      }
      const auto& slot = binding.slots.at(*a.slot);
      if (slot.held)
      {
        continue;  // the object is already in this hand
      }
      t.hand(h).primitive = a.primitive;
      t.hand(h).point = slot.point;
    }
    if (t.right.primitive == HandPrimitive::Idle && t.left.primitive == HandPrimitive::Idle)
    {
      continue;
    }
    seq.tuples.push_back(std::move(t));
  }
  fill_reasons(seq, hands, scene);
  return seq;
}

/// Primitive sequence read off the words of a skill name.
std::vector<HandPrimitive> primitives_from_name(std::string_view name)
{
  static const std::vector<std::pair<std::string, HandPrimitive>> kWords = {
    {"grab", HandPrimitive::Grasp},  {"grasp", HandPrimitive::Grasp},   {"place", HandPrimitive::Put},
    {"put", HandPrimitive::Put},     {"scan", HandPrimitive::Put},      {"press", HandPrimitive::Press},
    {"start", HandPrimitive::Press}, {"open", HandPrimitive::Pull},     {"pulling", HandPrimitive::Pull},
    {"close", HandPrimitive::Push},  {"pushing", HandPrimitive::Push},  {"lifting", HandPrimitive::Push},
    {"pour", HandPrimitive::Pour},   {"water", HandPrimitive::Pour},    {"release", HandPrimitive::Release},
    {"discard", HandPrimitive::Release},
  };
  std::vector<HandPrimitive> out;
  for (const auto& tok : tokenize(name))
  {
    for (const auto& [word, prim] : kWords)
    {
      if (tok == word && (out.empty() || out.back() != prim))
      {
        out.push_back(prim);
      }
    }
  }
  return out;
}

/// Without prototypes: one right-hand tuple per verb in the skill name, bound to
/// the lowest-id compatible point, with no hand or zone reasoning.
ActionSequence generate_without_prototypes(const PlanStep& step, const HandState& hands,
                                           const std::vector<ReachablePoint>& points, const SceneDocument& scene)
{
  ActionSequence seq;
  seq.skill_used = step.best_skill;
  for (HandPrimitive prim : primitives_from_name(step.best_skill))
  {
    for (const auto& rp : points)
    {
      if (primitive_compatible(prim, rp.point->descriptor.affordances))
      {
        BimanualTuple t;
        t.right.primitive = prim;
        t.right.point = rp.point->id;
        seq.tuples.push_back(std::move(t));
        break;
      }
    }
  }
  fill_reasons(seq, hands, scene);
  return seq;
}

}  // namespace

ActionSequence generate_tuples(const PlanStep& step, const HandState& hands,
                               const std::vector<ReachablePoint>& points, const KnowledgeBase& kb,
                               const SceneDocument& scene, const GenerateOptions& options)
{
  if (!kb.find(step.best_skill))
  {
    throw Error(Error::Kind::Generation, "skill '" + step.best_skill + "' is not in the knowledge base",
                step.best_skill);
  }
  const auto by_id = index_points(points);

  if (!options.skill_rag)
  {
    ActionSequence seq = generate_without_prototypes(step, hands, points, scene);
    const auto violations = validate_sequence(seq, hands, by_id, scene);
    if (seq.tuples.empty() || !violations.empty())
    {
      std::string detail = seq.tuples.empty() ? "no tuples produced" : describe(violations.front());
      throw Error(Error::Kind::Generation,
                  "generation without prototypes for '" + step.goal_text + "' is invalid: " + detail, step.goal_text);
    }
    return seq;
  }

  const auto prototypes = retrieve_top_k(step.best_skill, options.prototypes, kb);
  BindOptions bind_opts{step.focus_labels};
  std::ostringstream failures;
  for (const auto& proto : prototypes)
  {
    const BindResult binding = bind_prototype(*proto.entry, points, hands, scene, bind_opts);
    if (!binding.ok)
    {
      failures << "\n  '" << proto.entry->name << "': " << binding.failure;
      continue;
    }
    ActionSequence seq = instantiate(*proto.entry, binding, hands, scene);
    if (seq.tuples.empty())
    {
      failures << "\n  '" << proto.entry->name << "': every step elided";
      continue;
    }
    const auto violations = validate_sequence(seq, hands, by_id, scene);
    if (!violations.empty())
    {
      failures << "\n  '" << proto.entry->name << "': rejected by validation:";
      for (const auto& v : violations)
      {
        failures << "\n    " << describe(v);
      }
      continue;
    }
    return seq;
  }
  throw Error(Error::Kind::Generation,
              "no prototype could be bound for '" + step.goal_text + "':" + failures.str(), step.goal_text);
}

// ---------------------------------------------------------------------------
// validation

std::vector<Violation> validate_sequence(const ActionSequence& seq, const HandState& start,
                                         const std::map<int, ReachablePoint>& points_by_id,
                                         const SceneDocument& scene)
{
  std::vector<Violation> out;
  HandState hands = start;
  for (size_t i = 0; i < seq.tuples.size(); ++i)
  {
    const auto& t = seq.tuples[i];
    const int idx = static_cast<int>(i);
    auto emit = [&](ViolationKind k, std::optional<Hand> h, std::string detail) {
      out.push_back({k, idx, h, std::move(detail)});
    };

    if (t.right.primitive == HandPrimitive::Idle && t.left.primitive == HandPrimitive::Idle)
    {
      emit(ViolationKind::Binding, std::nullopt, "both hands idle");
    }
    if (t.right.point && t.left.point && *t.right.point == *t.left.point)
    {
      emit(ViolationKind::DuplicateTarget, std::nullopt,
           "both hands target point " + std::to_string(*t.right.point));
    }
    if (t.right.primitive == HandPrimitive::Grasp && t.left.primitive == HandPrimitive::Grasp && t.right.point &&
        t.left.point)
    {
      const auto* a = scene.point(*t.right.point);
      const auto* b = scene.point(*t.left.point);
      if (a && b && a->parent_object == b->parent_object && a->id != b->id)
      {
        emit(ViolationKind::DuplicateTarget, std::nullopt,
             "both hands grasp object " + std::to_string(a->parent_object) + " (points " + std::to_string(a->id) +
               ", " + std::to_string(b->id) + ")");
      }
    }

    for (Hand h : kHands)
    {
      const auto& a = t.hand(h);
      const bool idle = a.primitive == HandPrimitive::Idle;
      if (idle != !a.point.has_value())
      {
        emit(ViolationKind::Binding, h, "primitive must be idle exactly when no point is given");
        continue;
      }
      if (idle)
      {
        continue;
      }
      const int pid = *a.point;
      const auto found = points_by_id.find(pid);
      const InteractionPoint* p = scene.point(pid);
      if (found == points_by_id.end() || !p)
      {
        emit(ViolationKind::Binding, h, "point " + std::to_string(pid) + " is not in the reachable set");
        continue;
      }
      const auto& d = p->descriptor;
      const std::string prim(to_string(a.primitive));

      if (!zone_allows(h, found->second.zone))
      {
        emit(ViolationKind::Zone, h,
             std::string(to_string(h)) + " hand on " + std::string(to_string(found->second.zone)) +
               "-zone point " + std::to_string(pid));
      }
      if (!primitive_compatible(a.primitive, d.affordances))
      {
        emit(ViolationKind::Affordance, h, "point " + std::to_string(pid) + " does not afford " + prim);
      }
      if (a.primitive == HandPrimitive::Pull && !d.visual_attributes.count("hinged"))
      {
        emit(ViolationKind::Affordance, h, "pull on point " + std::to_string(pid) + " which is not hinged");
      }
      if (a.primitive == HandPrimitive::Grasp && d.visual_attributes.count("wall-mounted"))
      {
        emit(ViolationKind::Affordance, h, "grasp on wall-mounted point " + std::to_string(pid));
      }

      switch (a.primitive)
      {
        case HandPrimitive::Grasp:
          if (hands.holding(h))
          {
            emit(ViolationKind::HandState, h,
                 "grasp of point " + std::to_string(pid) + " while " + describe(hands.hand(h)));
          }
          else if (auto holder = hands.hand_holding(p->parent_object))
          {
            emit(ViolationKind::HandState, h,
                 "point " + std::to_string(pid) + " belongs to an object held by the " +
                   std::string(to_string(*holder)) + " hand");
          }
          break;
        case HandPrimitive::Put:
        case HandPrimitive::Release:
        case HandPrimitive::Pour:
          if (!hands.holding(h))
          {
            emit(ViolationKind::HandState, h, prim + " onto point " + std::to_string(pid) + " with a free hand");
          }
          else if (a.primitive == HandPrimitive::Pour)
          {
            bool pourable = false;
            for (const auto* sp : scene.points_of(hands.hand(h)->object_id))
            {
              pourable = pourable || sp->descriptor.affordances.count("pour-from") > 0;
            }
            if (!pourable)
            {
              emit(ViolationKind::Affordance, h, "held " + hands.hand(h)->label + " cannot be poured from");
            }
            if (p->parent_object == hands.hand(h)->object_id)
            {
              emit(ViolationKind::Affordance, h, "pour into the held object itself");
            }
          }
          break;
        default: break;
      }
    }
    hands = advance_hands(hands, t, scene);
  }
  return out;
}

}  // namespace biman
