#include "biman/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

namespace biman
{

// ---------------------------------------------------------------------------
// grid

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, Vec3 origin)
  : width_(width), height_(height), resolution_(resolution), origin_(origin),
    blocked_(static_cast<size_t>(width) * static_cast<size_t>(height), 0)
{
  if (width <= 0 || height <= 0 || !(resolution > 0.0))
  {
    throw std::invalid_argument("grid dimensions and resolution must be positive");
  }
}

Cell OccupancyGrid::cell_of(const Vec3& p) const
{
  return {static_cast<int>(std::floor((p.x - origin_.x) / resolution_)),
          static_cast<int>(std::floor((p.y - origin_.y) / resolution_))};
}

Vec3 OccupancyGrid::center(Cell c) const
{
  return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_, 0.0};
}

OccupancyGrid OccupancyGrid::from_scene(const SceneDocument& scene, double resolution, double agent_radius,
                                        double margin)
{
  double lo_x = std::numeric_limits<double>::infinity();
  double lo_y = lo_x;
  double hi_x = -lo_x;
  double hi_y = -lo_x;
  auto grow = [&](double x, double y) {
    lo_x = std::min(lo_x, x);
    lo_y = std::min(lo_y, y);
    hi_x = std::max(hi_x, x);
    hi_y = std::max(hi_y, y);
  };
  for (const auto& o : scene.object_points)
  {
    grow(o.position.x, o.position.y);
  }
  for (const auto& p : scene.interaction_points)
  {
    grow(p.position.x, p.position.y);
  }
  for (const auto& b : scene.obstacles)
  {
    grow(b.min.x, b.min.y);
    grow(b.max.x, b.max.y);
  }
  if (scene.agent_start)
  {
    grow(scene.agent_start->position.x, scene.agent_start->position.y);
  }
  if (!std::isfinite(lo_x))
  {
    grow(0.0, 0.0);
  }
  lo_x -= margin;
  lo_y -= margin;
  hi_x += margin;
  hi_y += margin;

  const int w = static_cast<int>(std::ceil((hi_x - lo_x) / resolution));
  const int h = static_cast<int>(std::ceil((hi_y - lo_y) / resolution));
  OccupancyGrid grid(std::max(w, 1), std::max(h, 1), resolution, {lo_x, lo_y, 0.0});

  for (int y = 0; y < grid.height(); ++y)
  {
    for (int x = 0; x < grid.width(); ++x)
    {
      const Vec3 c = grid.center({x, y});
      for (const auto& b : scene.obstacles)
      {
        const double dx = std::max({b.min.x - c.x, 0.0, c.x - b.max.x});
        const double dy = std::max({b.min.y - c.y, 0.0, c.y - b.max.y});
        if (std::hypot(dx, dy) <= agent_radius)
        {
          grid.set_blocked({x, y});
          break;
        }
      }
    }
  }
  return grid;
}

// ---------------------------------------------------------------------------
// A*

namespace
{

/// Exact path cost as counts of straight and diagonal moves.
struct MoveCount
{
  int straight = 0;
  int diagonal = 0;
  double value() const { return straight + diagonal * std::numbers::sqrt2; }
};

double octile(Cell a, Cell b)
{
  const int dx = std::abs(a.x - b.x);
  const int dy = std::abs(a.y - b.y);
  return std::max(dx, dy) + (std::numbers::sqrt2 - 1.0) * std::min(dx, dy);
}

constexpr std::array<std::pair<int, int>, 8> kMoves = {
  {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}}};

}  // namespace

std::optional<GridPath> plan_path(const OccupancyGrid& grid, Cell start, Cell goal)
{
  if (!grid.in_bounds(start) || !grid.in_bounds(goal))
  {
    throw std::invalid_argument("path endpoint out of grid bounds");
  }
  if (grid.blocked(start) || grid.blocked(goal))
  {
    throw std::invalid_argument("path endpoint is blocked");
  }

  const size_t n = static_cast<size_t>(grid.width()) * static_cast<size_t>(grid.height());
  std::vector<MoveCount> g(n);
  std::vector<double> g_value(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);

  using Entry = std::tuple<double, double, int>;  // f, h, cell index
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const int s = grid.index(start);
  const int t = grid.index(goal);
  g_value[s] = 0.0;
  open.emplace(octile(start, goal), octile(start, goal), s);

  while (!open.empty())
  {
    const auto [f, h, cur] = open.top();
    open.pop();
    if (closed[cur])
    {
      continue;
    }
    closed[cur] = 1;
    if (cur == t)
    {
      break;
    }
    const Cell c = grid.cell_at(cur);
    for (const auto& [dx, dy] : kMoves)
    {
      const Cell nb{c.x + dx, c.y + dy};
      if (!grid.in_bounds(nb) || grid.blocked(nb))
      {
        continue;
      }
      const bool diagonal = dx != 0 && dy != 0;
      if (diagonal && (grid.blocked({c.x + dx, c.y}) || grid.blocked({c.x, c.y + dy})))
      {
        continue;
      }
      const int ni = grid.index(nb);
      if (closed[ni])
      {
        continue;
      }
      MoveCount cand = g[cur];
      (diagonal ? cand.diagonal : cand.straight) += 1;
      const double v = cand.value();
      if (v < g_value[ni])
      {
        g[ni] = cand;
        g_value[ni] = v;
        parent[ni] = cur;
        const double hn = octile(nb, goal);
        open.emplace(v + hn, hn, ni);
      }
    }
  }

  if (!closed[t])
  {
    return std::nullopt;
  }
  GridPath path;
  path.cost = g_value[t];
  for (int i = t; i != -1; i = parent[i])
  {
    path.cells.push_back(grid.cell_at(i));
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

Pose select_stance(const OccupancyGrid& grid, const ObjectPoint& object, double max_distance)
{
  const Cell own = grid.cell_of(object.position);
  const int r = static_cast<int>(std::ceil(max_distance / grid.resolution())) + 1;
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  int best_index = std::numeric_limits<int>::max();
  for (int y = own.y - r; y <= own.y + r; ++y)
  {
    for (int x = own.x - r; x <= own.x + r; ++x)
    {
      const Cell c{x, y};
      if (c == own || !grid.in_bounds(c) || grid.blocked(c))
      {
        continue;
      }
      const Vec3 cc = grid.center(c);
      const double d = std::hypot(cc.x - object.position.x, cc.y - object.position.y);
      if (d > max_distance)
      {
        continue;
      }
      const int idx = grid.index(c);
      if (d < best_d || (d == best_d && idx < best_index))
      {
        best = c;
        best_d = d;
        best_index = idx;
      }
    }
  }
  if (!best)
  {
    throw Error(Error::Kind::Navigation,
                "no reachable stance within " + std::to_string(max_distance) + " m of object point " +
                  std::to_string(object.id),
                std::to_string(object.id));
  }
  Pose pose;
  const Vec3 cc = grid.center(*best);
  pose.position = {cc.x, cc.y, object.position.z};
  pose.yaw = std::atan2(object.position.y - cc.y, object.position.x - cc.x);
  return pose;
}

// ---------------------------------------------------------------------------
// world state

WorldState WorldState::initial(const SceneDocument& scene, const Pose& agent)
{
  WorldState s;
  s.agent = agent;
  for (const auto& p : scene.interaction_points)
  {
    s.point_states[p.id] = p.descriptor.state_tags;
  }
  for (const auto& o : scene.object_points)
  {
    s.object_locations[o.id] = ObjectLocation{};
  }
  return s;
}

TagSet WorldState::object_state(const SceneDocument& scene, int object_id) const
{
  TagSet out;
  for (const auto* p : scene.points_of(object_id))
  {
    auto it = point_states.find(p->id);
    if (it != point_states.end())
    {
      out.insert(it->second.begin(), it->second.end());
    }
  }
  return out;
}

namespace
{

Vec3 point_position(const SceneDocument& scene, const WorldState& state, const InteractionPoint& p)
{
  auto it = state.object_locations.find(p.parent_object);
  if (it == state.object_locations.end())
  {
    return p.position;
  }
  const auto& loc = it->second;
  switch (loc.kind)
  {
    case ObjectLocation::Kind::Origin: return p.position;
    case ObjectLocation::Kind::InHand: return state.agent.position;
    case ObjectLocation::Kind::AtPoint:
    case ObjectLocation::Kind::InsidePoint: return scene.point(loc.point)->position;
  }
  return p.position;
}

bool same_world(const WorldState& a, const WorldState& b)
{
  if (!(a.hands == b.hands) || a.point_states != b.point_states)
  {
    return false;
  }
  for (const auto& [id, la] : a.object_locations)
  {
    const auto& lb = b.object_locations.at(id);
    if (la.kind != lb.kind || la.point != lb.point || (la.kind == ObjectLocation::Kind::InHand && la.hand != lb.hand))
    {
      return false;
    }
  }
  return true;
}

std::optional<Violation> apply_effect_rules(WorldState& s, const InteractionPoint& p, HandPrimitive prim,
                                            const SceneDocument& scene, Hand hand, int idx)
{
  bool any = false;
  const TagSet current = s.object_state(scene, p.parent_object);
  for (const auto& rule : p.descriptor.effects)
  {
    if (rule.primitive != prim)
    {
      continue;
    }
    any = true;
    if (!is_subset(rule.required_state, current))
    {
      continue;
    }
    auto& tags = s.point_states[p.id];
    for (const auto& r : rule.removes)
    {
      tags.erase(r);
    }
    tags.insert(rule.adds.begin(), rule.adds.end());
    return std::nullopt;
  }
  if (!any)
  {
    return std::nullopt;
  }
  std::vector<std::string> have(current.begin(), current.end());
  return Violation{ViolationKind::Affordance, idx, hand,
                   std::string(to_string(prim)) + " on point " + std::to_string(p.id) +
                     ": no effect rule applies to state [" + join(have, ",") + "]"};
}

std::optional<Violation> apply_hand(WorldState& s, Hand h, const HandAction& a, const SceneDocument& scene,
                                    int idx)
{
  if (a.primitive == HandPrimitive::Idle || !a.point)
  {
    return std::nullopt;
  }
  const InteractionPoint* p = scene.point(*a.point);
  if (!p)
  {
    return Violation{ViolationKind::Binding, idx, h, "unknown point " + std::to_string(*a.point)};
  }
  const std::string pid = std::to_string(p->id);
  auto& held = s.hands.hand(h);

  switch (a.primitive)
  {
    case HandPrimitive::Grasp:
    {
      if (held)
      {
        return Violation{ViolationKind::HandState, idx, h, "grasp of point " + pid + " while " + describe(held)};
      }
      if (auto other_hand = s.hands.hand_holding(p->parent_object))
      {
        return Violation{ViolationKind::HandState, idx, h,
                         "object of point " + pid + " is held by the " + std::string(to_string(*other_hand)) +
                           " hand"};
      }
      if (!p->descriptor.affordances.count("grab"))
      {
        return Violation{ViolationKind::Affordance, idx, h, "point " + pid + " cannot be grabbed"};
      }
      if (auto v = apply_effect_rules(s, *p, a.primitive, scene, h, idx))
      {
        return v;
      }
      held = HeldObject{p->parent_object, scene.object(p->parent_object)->label};
      s.object_locations[p->parent_object] = {ObjectLocation::Kind::InHand, 0, h};
      return std::nullopt;
    }
    case HandPrimitive::Put:
    case HandPrimitive::Release:
    {
      if (!held)
      {
        return Violation{ViolationKind::HandState, idx, h, std::string(to_string(a.primitive)) + " with a free hand"};
      }
      if (auto v = apply_effect_rules(s, *p, a.primitive, scene, h, idx))
      {
        return v;
      }
      const auto kind =
        a.primitive == HandPrimitive::Put ? ObjectLocation::Kind::AtPoint : ObjectLocation::Kind::InsidePoint;
      s.object_locations[held->object_id] = {kind, p->id, h};
      held.reset();
      return std::nullopt;
    }
    case HandPrimitive::Pour:
    {
      if (!held)
      {
        return Violation{ViolationKind::HandState, idx, h, "pour with a free hand"};
      }
      bool moved = false;
      for (const auto* sp : scene.points_of(held->object_id))
      {
        auto& tags = s.point_states[sp->id];
        if (sp->descriptor.affordances.count("pour-from") && tags.erase("filled"))
        {
          moved = true;
        }
      }
      if (!moved)
      {
        return Violation{ViolationKind::Affordance, idx, h, "held " + held->label + " has nothing to pour"};
      }
      if (auto v = apply_effect_rules(s, *p, a.primitive, scene, h, idx))
      {
        return v;
      }
      s.point_states[p->id].insert("filled");
      return std::nullopt;
    }
    default: return apply_effect_rules(s, *p, a.primitive, scene, h, idx);
  }
}

}  // namespace

SceneDocument current_view(const SceneDocument& scene, const WorldState& state)
{
  SceneDocument view = scene;
  for (auto& p : view.interaction_points)
  {
    auto it = state.point_states.find(p.id);
    if (it != state.point_states.end())
    {
      p.descriptor.state_tags = it->second;
    }
    p.position = point_position(scene, state, p);
  }
  return view;
}

SceneDocument strip_descriptors(SceneDocument scene)
{
  for (auto& p : scene.interaction_points)
  {
    p.descriptor.visual_attributes.clear();
    p.descriptor.state_tags.clear();
  }
  return scene;
}

std::variant<WorldState, Violation> execute_tuple(const WorldState& state, const BimanualTuple& tuple,
                                                  const SceneDocument& scene, double reach_threshold,
                                                  int tuple_index)
{
  for (Hand h : kHands)
  {
    const auto& a = tuple.hand(h);
    if (!a.point)
    {
      continue;
    }
    const auto* p = scene.point(*a.point);
    if (!p)
    {
      return Violation{ViolationKind::Binding, tuple_index, h, "unknown point " + std::to_string(*a.point)};
    }
    const double d = distance(point_position(scene, state, *p), state.agent.position);
    if (d > reach_threshold)
    {
      return Violation{ViolationKind::Zone, tuple_index, h,
                       "point " + std::to_string(p->id) + " is " + std::to_string(d) + " m away, beyond reach"};
    }
  }
  if (tuple.right.point && tuple.left.point && *tuple.right.point == *tuple.left.point)
  {
    return Violation{ViolationKind::DuplicateTarget, tuple_index, std::nullopt,
                     "both hands target point " + std::to_string(*tuple.right.point)};
  }

  WorldState right_first = state;
  auto v1 = apply_hand(right_first, Hand::Right, tuple.right, scene, tuple_index);
  if (!v1)
  {
    v1 = apply_hand(right_first, Hand::Left, tuple.left, scene, tuple_index);
  }
  WorldState left_first = state;
  auto v2 = apply_hand(left_first, Hand::Left, tuple.left, scene, tuple_index);
  if (!v2)
  {
    v2 = apply_hand(left_first, Hand::Right, tuple.right, scene, tuple_index);
  }

  if (v1 && v2)
  {
    return *v1;
  }
  if (v1 || v2 || !same_world(right_first, left_first))
  {
    return Violation{ViolationKind::DuplicateTarget, tuple_index, std::nullopt,
                     "hand effects do not commute within one tuple"};
  }
  return right_first;
}

WorldState update_world(const WorldState& state, const ActionSequence& sequence, const std::string& subgoal,
                        const SceneDocument& scene, double reach_threshold)
{
  if (sequence.tuples.empty())
  {
    throw Error(Error::Kind::Generation, "empty action sequence for '" + subgoal + "'", subgoal);
  }
  WorldState s = state;
  for (size_t i = 0; i < sequence.tuples.size(); ++i)
  {
    auto r = execute_tuple(s, sequence.tuples[i], scene, reach_threshold, static_cast<int>(i));
    if (auto* v = std::get_if<Violation>(&r))
    {
      throw ExecutionError(*v);
    }
    s = std::move(std::get<WorldState>(r));
  }
  s.completed_goals.push_back(subgoal);
  return s;
}

namespace
{
int resolve_object(const SceneDocument& scene, const std::string& label)
{
  auto id = resolve_label(scene, label);
  if (!id)
  {
    throw Error(Error::Kind::Evaluation, "goal references unknown object '" + label + "'", label);
  }
  return *id;
}
}  // namespace

bool evaluate_goal(const TaskSpec& task, const WorldState& state, const SceneDocument& scene)
{
  bool all = true;
  for (const auto& goal : task.goal_predicates)
  {
    bool ok = std::visit(
      [&](const auto& g) -> bool {
        using G = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<G, StateGoal>)
        {
          if (g.point_id)
          {
            auto it = state.point_states.find(*g.point_id);
            if (it == state.point_states.end())
            {
              throw Error(Error::Kind::Evaluation,
                          "goal references unknown point " + std::to_string(*g.point_id));
            }
            return it->second.count(g.tag) > 0;
          }
          return state.object_state(scene, resolve_object(scene, *g.object_label)).count(g.tag) > 0;
        }
        else if constexpr (std::is_same_v<G, LocatedGoal>)
        {
          const int obj = resolve_object(scene, g.object_label);
          const auto* target = scene.point(g.at_point_id);
          if (!target)
          {
            throw Error(Error::Kind::Evaluation,
                        "goal references unknown point " + std::to_string(g.at_point_id));
          }
          const auto& loc = state.object_locations.at(obj);
          Vec3 where;
          switch (loc.kind)
          {
            case ObjectLocation::Kind::InHand: return false;
            case ObjectLocation::Kind::Origin: where = scene.object(obj)->position; break;
            default: where = scene.point(loc.point)->position; break;
          }
          return distance(where, target->position) <= g.radius;
        }
        else
        {
          return state.hands.hand_holding(resolve_object(scene, g.object_label)).has_value();
        }
      },
      goal);
    all = all && ok;
  }
  return all;
}

// ---------------------------------------------------------------------------
// trial

namespace
{

std::vector<ReachablePoint> reachable_excluding_held(const SceneDocument& view, const WorldState& state,
                                                     double reach)
{
  auto points = sample_reachable(view, state.agent, reach);
  std::erase_if(points, [&](const ReachablePoint& rp) {
    return state.hands.hand_holding(rp.point->parent_object).has_value();
  });
  return points;
}

}  // namespace

TrialReport run_trial(const SceneDocument& scene, const TaskSpec& task, const KnowledgeBase& kb,
                      const TrialConfig& config)
{
  TrialReport report;
  report.task = task.name;
  std::string stage = "plan";
  try
  {
    const SceneDocument planning_scene = config.descriptors ? scene : strip_descriptors(scene);
    const auto adjacency = build_adjacency(scene, config.adjacency_threshold);

    auto triplets = generate_subgoals(task, planning_scene, adjacency);
    if (config.merge)
    {
      triplets = merge_subgoals(std::move(triplets), planning_scene, adjacency, kb);
    }
    triplets = resolve_continuity(std::move(triplets), planning_scene, adjacency, kb, config.merge);
    report.triplets = triplets;

    stage = "refine";
    const auto skeleton = refine_best_skill(triplets, kb, planning_scene, adjacency);

    stage = "navigate";
    const auto grid = OccupancyGrid::from_scene(scene, config.grid_resolution, config.agent_radius);
    Pose start;
    if (scene.agent_start)
    {
      start = *scene.agent_start;
    }
    else if (!skeleton.sequence.empty())
    {
      start = select_stance(grid, *scene.object(skeleton.sequence.front().object_point));
    }
    WorldState state = WorldState::initial(scene, start);

    for (size_t i = 0; i < skeleton.sequence.size(); ++i)
    {
      const auto& step = skeleton.sequence[i];
      SubgoalRecord rec;
      rec.index = static_cast<int>(i);
      rec.object_point = step.object_point;
      rec.goal_text = step.goal_text;
      rec.best_skill = step.best_skill;

      stage = "navigate";
      rec.stance = select_stance(grid, *scene.object(step.object_point));
      const Cell from = grid.cell_of(state.agent.position);
      const Cell to = grid.cell_of(rec.stance.position);
      auto path = plan_path(grid, from, to);
      if (!path)
      {
        throw Error(Error::Kind::Navigation,
                    "no path to the stance for object point " + std::to_string(step.object_point));
      }
      rec.navigation.cells = path->cells;
      rec.navigation.length = path->cost * grid.resolution();
      report.path_length += rec.navigation.length;
      state.agent = rec.stance;

      stage = "generate";
      const SceneDocument view = current_view(scene, state);
      const auto points = reachable_excluding_held(view, state, config.reach_threshold);
      const SceneDocument planning_view = config.descriptors ? view : strip_descriptors(view);
      GenerateOptions gen;
      gen.skill_rag = config.skill_rag;
      rec.actions = generate_tuples(step, state.hands, points, kb, planning_view, gen);
      rec.actions.subgoal_index = rec.index;

      stage = "execute";
      report.subgoals.push_back(rec);
      state = update_world(state, rec.actions, step.goal_text, scene, config.reach_threshold);
      report.operation_count += static_cast<int>(rec.actions.tuples.size());
    }

    stage = "evaluate";
    report.goal_met = evaluate_goal(task, state, scene);
    report.final_state = state;
    report.success = report.goal_met && report.violations.empty();
    if (!report.goal_met)
    {
      report.error = StageError{stage, "goal-unmet", "plan executed but the goal predicates do not hold"};
    }
  }
  catch (const ExecutionError& e)
  {
    report.violations.push_back(e.violation());
    report.error = StageError{stage, std::string(to_string(e.kind())), e.what()};
    report.success = false;
  }
  catch (const Error& e)
  {
    report.error = StageError{stage, std::string(to_string(e.kind())), e.what()};
    report.success = false;
  }
  catch (const std::exception& e)
  {
    report.error = StageError{stage, "internal", e.what()};
    report.success = false;
  }
  return report;
}

}  // namespace biman
