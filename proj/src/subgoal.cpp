#include "biman/subgoal.hpp"

#include "biman/json_util.hpp"
#include "biman/matching.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <sstream>

namespace biman
{

namespace
{

constexpr std::array<std::pair<Verb, std::string_view>, 8> kVerbNames = {{
  {Verb::Acquire, "acquire"},
  {Verb::PlaceInto, "place_into"},
  {Verb::Open, "open"},
  {Verb::Close, "close"},
  {Verb::Press, "press"},
  {Verb::PourInto, "pour_into"},
  {Verb::DiscardInto, "discard_into"},
  {Verb::OperateWithHeld, "operate_with_held"},
}};

struct Phrase
{
  std::string goal;
  std::string abstract_skill;
};

Phrase render(const Intent& in)
{
  const std::string& s = in.subject;
  const std::string t = in.target.value_or("");
  switch (in.verb)
  {
    case Verb::Acquire: return {"grab the " + s, "grasp a single item"};
    case Verb::PlaceInto: return {"place the " + s + " into the " + t, "place a held item into a receptacle"};
    case Verb::Open: return {"open the " + s, "open a door"};
    case Verb::Close: return {"close the " + s, "close a door"};
    case Verb::Press: return {"press the " + s + " button", "press a button"};
    case Verb::PourInto: return {"pour from the " + s + " into the " + t, "pour from container A to container B"};
    case Verb::DiscardInto: return {"throw the " + s + " into the " + t, "discard an item into a receptacle"};
    case Verb::OperateWithHeld:
      return {"open the " + t + " door and place the " + s + " inside", "operate an appliance with a held item"};
  }
  return {};
}

template<typename T>
std::set<T> set_union(const std::set<T>& a, const std::set<T>& b)
{
  std::set<T> out = a;
  out.insert(b.begin(), b.end());
  return out;
}

template<typename T>
std::set<T> set_minus(const std::set<T>& a, const std::set<T>& b)
{
  std::set<T> out;
  for (const auto& v : a)
  {
    if (!b.count(v))
    {
      out.insert(v);
    }
  }
  return out;
}

template<typename T>
bool intersects(const std::set<T>& a, const std::set<T>& b)
{
  for (const auto& v : a)
  {
    if (b.count(v))
    {
      return true;
    }
  }
  return false;
}

GoalPredicate parse_goal(const json& j, const std::string& path)
{
  const std::string kind = get_string(j, "kind", path);
  if (kind == "state")
  {
    StateGoal g;
    if (j.contains("point"))
    {
      g.point_id = get_int(j, "point", path);
    }
    else
    {
      g.object_label = get_string(j, "object", path);
    }
    g.tag = get_string(j, "tag", path);
    return g;
  }
  if (kind == "located")
  {
    LocatedGoal g;
    g.object_label = get_string(j, "object", path);
    g.at_point_id = get_int(j, "at_point", path);
    g.radius = get_double(j, "radius", path);
    if (!(g.radius >= 0.0))
    {
      throw Error(Error::Kind::Schema, path + ".radius: must be non-negative", path + ".radius");
    }
    return g;
  }
  if (kind == "held")
  {
    return HeldGoal{get_string(j, "object", path)};
  }
  throw Error(Error::Kind::Schema, path + ".kind: expected state|located|held", path + ".kind");
}

}  // namespace

std::string_view to_string(Verb v)
{
  for (const auto& [verb, name] : kVerbNames)
  {
    if (verb == v)
    {
      return name;
    }
  }
  return "acquire";
}

std::optional<Verb> parse_verb(std::string_view s)
{
  for (const auto& [verb, name] : kVerbNames)
  {
    if (name == s)
    {
      return verb;
    }
  }
  return std::nullopt;
}

bool verb_needs_target(Verb v)
{
  return v == Verb::PlaceInto || v == Verb::PourInto || v == Verb::DiscardInto || v == Verb::OperateWithHeld;
}

TaskSpec parse_task(std::string_view json_text)
{
  const json doc = parse_json(json_text);
  if (!doc.is_object())
  {
    throw Error(Error::Kind::Parse, "task document must be a JSON object");
  }
  if (doc.contains("schema") && doc.at("schema") != "task.v1")
  {
    throw Error(Error::Kind::Schema, "unsupported task schema " + doc.at("schema").dump(), "schema");
  }
  TaskSpec task;
  task.name = get_string(doc, "name", "");
  const json& intents = get_array(doc, "intents", "");
  for (size_t i = 0; i < intents.size(); ++i)
  {
    const std::string path = "intents[" + std::to_string(i) + "]";
    Intent in;
    auto verb = parse_verb(get_string(intents[i], "verb", path));
    if (!verb)
    {
      throw Error(Error::Kind::Schema, path + ".verb: unknown verb", path + ".verb");
    }
    in.verb = *verb;
    in.subject = get_string(intents[i], "subject", path);
    if (intents[i].contains("target") && !intents[i].at("target").is_null())
    {
      in.target = get_string(intents[i], "target", path);
    }
    if (verb_needs_target(in.verb) && !in.target)
    {
      throw Error(Error::Kind::Schema, path + ".target: verb '" + std::string(to_string(in.verb)) + "' needs a target",
                  path + ".target");
    }
    task.intents.push_back(std::move(in));
  }
  if (doc.contains("goal_predicates"))
  {
    const json& goals = get_array(doc, "goal_predicates", "");
    for (size_t i = 0; i < goals.size(); ++i)
    {
      task.goal_predicates.push_back(parse_goal(goals[i], "goal_predicates[" + std::to_string(i) + "]"));
    }
  }
  if (doc.contains("scene"))
  {
    task.scene_path = get_string(doc, "scene", "");
  }
  return task;
}

TaskSpec load_task(const std::filesystem::path& file)
{
  auto task = parse_task(read_file(file));
  if (task.scene_path && task.scene_path->is_relative())
  {
    task.scene_path = file.parent_path() / *task.scene_path;
  }
  return task;
}

std::optional<int> resolve_label(const SceneDocument& scene, std::string_view label)
{
  const std::string query = to_lower(label);
  for (const auto& o : scene.object_points)
  {
    if (to_lower(o.label) == query)
    {
      return o.id;
    }
  }
  std::optional<int> best;
  size_t best_len = 0;
  for (const auto& o : scene.object_points)
  {
    const std::string l = to_lower(o.label);
    size_t overlap = 0;
    if (query.find(l) != std::string::npos)
    {
      overlap = l.size();
    }
    else if (l.find(query) != std::string::npos)
    {
      overlap = query.size();
    }
    if (overlap > best_len)
    {
      best_len = overlap;
      best = o.id;
    }
  }
  return best;
}

namespace
{
int resolve_or_throw(const SceneDocument& scene, const std::string& label)
{
  if (auto id = resolve_label(scene, label))
  {
    return *id;
  }
  std::vector<std::string> labels;
  for (const auto& o : scene.object_points)
  {
    labels.push_back(o.label);
  }
  throw Error(Error::Kind::UnresolvedLabel,
              "label '" + label + "' matches no object point; scene labels: " + join(labels, ", "), label);
}
}  // namespace

std::vector<SubgoalTriplet> generate_subgoals(const TaskSpec& task, const SceneDocument& scene,
                                              const AdjacencyGraph&)
{
  std::vector<SubgoalTriplet> out;
  out.reserve(task.intents.size());
  for (const auto& in : task.intents)
  {
    SubgoalTriplet t;
    const Phrase ph = render(in);
    t.goal_text = ph.goal;
    t.abstract_skill = ph.abstract_skill;
    t.focus_labels.push_back(in.subject);
    if (in.target)
    {
      t.focus_labels.push_back(*in.target);
      // the subject must resolve even though the agent walks to the target
      resolve_or_throw(scene, in.subject);
      t.object_point = resolve_or_throw(scene, *in.target);
    }
    else
    {
      t.object_point = resolve_or_throw(scene, in.subject);
    }
    t.origin_points = {t.object_point};

    switch (in.verb)
    {
      case Verb::Acquire: t.holds_established.insert(in.subject); break;
      case Verb::PourInto: t.holds_required.insert(in.subject); break;
      case Verb::PlaceInto:
      case Verb::DiscardInto:
      case Verb::OperateWithHeld:
        t.holds_required.insert(in.subject);
        t.holds_released.insert(in.subject);
        break;
      default: break;
    }
    out.push_back(std::move(t));
  }
  return out;
}

int hand_demand(const SubgoalTriplet& t, const KnowledgeBase& kb)
{
  if (t.hand_demand > 0)
  {
    return t.hand_demand;
  }
  const auto top = retrieve_top_k(t.abstract_skill, 1, kb);
  if (!top.empty() && top.front().entry->coordination == Coordination::TwoHandsOneObject)
  {
    return 2;
  }
  return 1;
}

std::optional<int> merge_anchor(const std::vector<int>& origins, const SceneDocument& scene,
                                const AdjacencyGraph& adjacency)
{
  std::optional<int> best;
  double best_max = std::numeric_limits<double>::infinity();
  double best_sum = std::numeric_limits<double>::infinity();
  for (const auto& c : scene.object_points)
  {
    double worst = 0.0;
    double sum = 0.0;
    bool ok = true;
    for (int o : origins)
    {
      if (!adjacency.same_or_adjacent(c.id, o))
      {
        ok = false;
        break;
      }
      const double d = distance(c.position, scene.object(o)->position);
      worst = std::max(worst, d);
      sum += d;
    }
    if (!ok)
    {
      continue;
    }
    // object_points are id-sorted, so strict comparison keeps the lowest id on ties
    if (worst < best_max || (worst == best_max && sum < best_sum))
    {
      best = c.id;
      best_max = worst;
      best_sum = sum;
    }
  }
  return best;
}

bool can_merge(const SubgoalTriplet& a, const SubgoalTriplet& b, const AdjacencyGraph& adjacency,
               const KnowledgeBase& kb, bool check_holds)
{
  if (!adjacency.same_or_adjacent(a.object_point, b.object_point))
  {
    return false;
  }
  if (hand_demand(a, kb) + hand_demand(b, kb) > 2)
  {
    return false;
  }
  if (check_holds &&
      (intersects(a.holds_required, b.holds_established) || intersects(b.holds_required, a.holds_established)))
  {
    return false;
  }
  // both steps needing the same held object would compete for the hand holding it
  if (intersects(a.holds_required, b.holds_required))
  {
    return false;
  }
  return true;
}

SubgoalTriplet merge_pair(const SubgoalTriplet& a, const SubgoalTriplet& b, int anchor, const KnowledgeBase& kb)
{
  SubgoalTriplet m;
  m.object_point = anchor;
  m.goal_text = a.goal_text + "; " + b.goal_text;
  m.abstract_skill = a.abstract_skill + " while " + b.abstract_skill;
  m.holds_required = set_union(a.holds_required, set_minus(b.holds_required, a.holds_established));
  m.holds_established = set_union(set_minus(a.holds_established, b.holds_released), b.holds_established);
  m.holds_released = set_union(a.holds_released, set_minus(b.holds_released, a.holds_established));
  m.origin_points = a.origin_points;
  m.origin_points.insert(m.origin_points.end(), b.origin_points.begin(), b.origin_points.end());
  m.focus_labels = a.focus_labels;
  for (const auto& l : b.focus_labels)
  {
    if (std::find(m.focus_labels.begin(), m.focus_labels.end(), l) == m.focus_labels.end())
    {
      m.focus_labels.push_back(l);
    }
  }
  m.hand_demand = hand_demand(a, kb) + hand_demand(b, kb);
  return m;
}

std::vector<SubgoalTriplet> merge_subgoals(std::vector<SubgoalTriplet> triplets, const SceneDocument& scene,
                                           const AdjacencyGraph& adjacency, const KnowledgeBase& kb)
{
  for (auto& t : triplets)
  {
    t.hand_demand = hand_demand(t, kb);
  }
  bool changed = true;
  while (changed)
  {
    changed = false;
    size_t i = 0;
    while (i + 1 < triplets.size())
    {
      const auto& a = triplets[i];
      const auto& b = triplets[i + 1];
      std::optional<int> anchor;
      if (can_merge(a, b, adjacency, kb, true))
      {
        std::vector<int> origins = a.origin_points;
        origins.insert(origins.end(), b.origin_points.begin(), b.origin_points.end());
        anchor = merge_anchor(origins, scene, adjacency);
      }
      if (anchor)
      {
        triplets[i] = merge_pair(a, b, *anchor, kb);
        triplets.erase(triplets.begin() + static_cast<long>(i) + 1);
        changed = true;
      }
      else
      {
        ++i;
      }
    }
  }
  return triplets;
}

std::vector<SubgoalTriplet> resolve_continuity(std::vector<SubgoalTriplet> triplets, const SceneDocument& scene,
                                               const AdjacencyGraph& adjacency, const KnowledgeBase& kb,
                                               bool allow_merge)
{
  std::vector<SubgoalTriplet> out;
  std::map<std::string, size_t> holder;  // held label -> index in `out`
  for (auto& t : triplets)
  {
    if (t.hand_demand == 0)
    {
      t.hand_demand = hand_demand(t, kb);
    }
    std::optional<size_t> merge_into;
    for (const auto& a : t.holds_required)
    {
      auto it = holder.find(a);
      if (it == holder.end())
      {
        throw Error(Error::Kind::Continuity,
                    "subgoal '" + t.goal_text + "' needs '" + a + "' in hand but no earlier subgoal grasps it", a);
      }
      if (allow_merge && it->second + 1 == out.size())
      {
        merge_into = it->second;
      }
    }

    if (merge_into && can_merge(out[*merge_into], t, adjacency, kb, false))
    {
      std::vector<int> origins = out[*merge_into].origin_points;
      origins.insert(origins.end(), t.origin_points.begin(), t.origin_points.end());
      if (auto anchor = merge_anchor(origins, scene, adjacency))
      {
        out[*merge_into] = merge_pair(out[*merge_into], t, *anchor, kb);
        holder.clear();
        for (size_t i = 0; i < out.size(); ++i)
        {
          for (const auto& e : out[i].holds_established)
          {
            holder[e] = i;
          }
          for (const auto& r : out[i].holds_released)
          {
            holder.erase(r);
          }
        }
        continue;
      }
    }

    for (const auto& r : t.holds_released)
    {
      holder.erase(r);
    }
    out.push_back(std::move(t));
    for (const auto& e : out.back().holds_established)
    {
      holder[e] = out.size() - 1;
    }
  }
  return out;
}

bool continuity_holds(const std::vector<SubgoalTriplet>& triplets)
{
  std::set<std::string> held;
  for (const auto& t : triplets)
  {
    if (intersects(t.holds_required, t.holds_established))
    {
      return false;
    }
    for (const auto& a : t.holds_required)
    {
      if (!held.count(a))
      {
        return false;
      }
    }
    for (const auto& r : t.holds_released)
    {
      held.erase(r);
    }
    held.insert(t.holds_established.begin(), t.holds_established.end());
  }
  return true;
}

std::optional<std::string> refine_rejection(const SkillEntry& entry, const SubgoalTriplet& triplet,
                                            const std::set<std::string>& carried, const SceneDocument& scene,
                                            const AdjacencyGraph& adjacency)
{
  if (triplet.merged() && entry.coordination == Coordination::Unimanual)
  {
    return std::string("merged subgoal needs a two-handed skill");
  }

  // Candidate points per slot; slots bind to distinct points.
  std::vector<std::vector<const InteractionPoint*>> options;
  for (const auto& tmpl : entry.point_preconditions)
  {
    if (!carried.empty() && grasp_only_slot(entry, tmpl.slot))
    {
      continue;  // may be satisfied by the object already in hand
    }
    std::vector<const InteractionPoint*> fits;
    for (const auto& p : scene.interaction_points)
    {
      if (adjacency.same_or_adjacent(p.parent_object, triplet.object_point) &&
          matches_template(tmpl, p, scene.object(p.parent_object)->label))
      {
        fits.push_back(&p);
      }
    }
    if (fits.empty())
    {
      return "not feasible at object point " + std::to_string(triplet.object_point) + ": no point fits slot '" +
             tmpl.slot + "'";
    }
    options.push_back(std::move(fits));
  }

  // A merged subgoal must touch every object it was merged from, unless that object is in hand.
  std::vector<int> must_cover;
  if (triplet.merged())
  {
    for (int origin : triplet.origin_points)
    {
      const auto* o = scene.object(origin);
      if (o && !carried.count(o->label))
      {
        must_cover.push_back(origin);
      }
    }
  }
  std::vector<const InteractionPoint*> chosen;
  std::function<bool(size_t)> assign = [&](size_t i) -> bool
  {
    if (i == options.size())
    {
      return std::all_of(must_cover.begin(), must_cover.end(), [&](int origin)
                         { return std::any_of(chosen.begin(), chosen.end(),
                                              [&](const InteractionPoint* p) { return p->parent_object == origin; }); });
    }
    for (const auto* p : options[i])
    {
      if (std::find(chosen.begin(), chosen.end(), p) != chosen.end())
      {
        continue;
      }
      chosen.push_back(p);
      if (assign(i + 1))
      {
        return true;
      }
      chosen.pop_back();
    }
    return false;
  };
  if (!assign(0))
  {
    return std::string(triplet.merged() ? "slots cannot bind distinct points covering every merged object"
                                        : "slots cannot bind distinct points");
  }

  const size_t n = carried.size();
  bool ok = false;
  if (n == 0)
  {
    ok = hands_meet(entry.hand_preconditions, false, false, false);
  }
  else if (n == 1)
  {
    ok = hands_meet(entry.hand_preconditions, true, false, false) ||
         hands_meet(entry.hand_preconditions, false, true, false);
  }
  else if (n == 2)
  {
    ok = hands_meet(entry.hand_preconditions, true, true, false);
  }
  if (!ok)
  {
    return "hand preconditions unmet with " + std::to_string(n) + " object(s) in hand";
  }
  return std::nullopt;
}

RefinedPlanSkeleton refine_best_skill(const std::vector<SubgoalTriplet>& triplets, const KnowledgeBase& kb,
                                      const SceneDocument& scene, const AdjacencyGraph& adjacency,
                                      const RefineOptions& options)
{
  RefinedPlanSkeleton plan;
  std::set<std::string> carried;
  for (const auto& t : triplets)
  {
    const auto candidates = retrieve_top_k(t.abstract_skill, options.candidates, kb);
    const SkillEntry* chosen = nullptr;
    std::ostringstream rejected;
    for (const auto& c : candidates)
    {
      if (auto why = refine_rejection(*c.entry, t, carried, scene, adjacency))
      {
        rejected << "\n  '" << c.entry->name << "': " << *why;
        continue;
      }
      chosen = c.entry;
      break;
    }
    if (!chosen)
    {
      throw Error(Error::Kind::Refinement,
                  "no feasible skill for '" + t.abstract_skill + "' at object point " +
                    std::to_string(t.object_point) + "; rejected:" + rejected.str(),
                  t.goal_text);
    }
    plan.sequence.push_back(
      {t.object_point, t.goal_text, chosen->name, t.focus_labels, t.holds_required, t.origin_points});

    for (const auto& r : t.holds_released)
    {
      carried.erase(r);
    }
    carried.insert(t.holds_established.begin(), t.holds_established.end());
  }
  return plan;
}

}  // namespace biman
