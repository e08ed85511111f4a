#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"

#include "biman/json_util.hpp"
#include "biman/world.hpp"

using namespace biman;
using testing_support::data_dir;
using testing_support::fixture_kb;

namespace
{

// A cabinet whose button only works with the door closed.
SceneDocument cabinet()
{
  return parse_scene(R"({
    "object_points": [{"id": 1, "label": "cabinet", "position": [1.0, 0.0, 1.0]},
                      {"id": 2, "label": "cup", "position": [0.9, -0.3, 1.0]}],
    "interaction_points": [
      {"id": 10, "parent_object": 1, "position": [0.9, 0.25, 1.0],
       "descriptor": {"part_label": "door", "visual_attributes": ["hinged"], "affordances": ["pull", "push"],
                      "state_tags": ["closed"],
                      "effects": [{"primitive": "pull", "required_state": ["closed"], "removes": ["closed"], "adds": ["open"]},
                                  {"primitive": "push", "required_state": ["open"], "removes": ["open"], "adds": ["closed"]}]}},
      {"id": 11, "parent_object": 1, "position": [0.9, 0.0, 1.0],
       "descriptor": {"part_label": "button", "affordances": ["press"], "state_tags": ["idle"],
                      "effects": [{"primitive": "press", "required_state": ["closed", "idle"], "removes": ["idle"], "adds": ["running"]}]}},
      {"id": 12, "parent_object": 1, "position": [1.0, 0.0, 1.0],
       "descriptor": {"part_label": "shelf", "affordances": ["put-on"]}},
      {"id": 20, "parent_object": 2, "position": [0.9, -0.3, 1.0],
       "descriptor": {"part_label": "body", "affordances": ["grab"]}}
    ]
  })");
}

BimanualTuple tuple(HandPrimitive r, std::optional<int> rp, HandPrimitive l, std::optional<int> lp)
{
  BimanualTuple t;
  t.right = {r, rp, ""};
  t.left = {l, lp, ""};
  return t;
}

ActionSequence sequence(std::vector<BimanualTuple> tuples)
{
  ActionSequence s;
  s.tuples = std::move(tuples);
  return s;
}

const Pose kOrigin{{0.3, 0.0, 1.0}, 0.0};

}  // namespace

TEST_CASE("grid blocks inflated obstacles")
{
  const auto scene = load_scene(data_dir() / "scenes" / "convenience_store.json");
  const auto grid = OccupancyGrid::from_scene(scene, 0.1, 0.3);
  CHECK(grid.blocked(grid.cell_of({2.3, 0.75, 0.0})));
  CHECK(grid.blocked(grid.cell_of({1.85, 0.75, 0.0})));
  CHECK_FALSE(grid.blocked(grid.cell_of({1.55, 0.75, 0.0})));
  const Cell c = grid.cell_of({1.0, 2.0, 0.0});
  CHECK(distance(grid.center(c), {1.0, 2.0, 0.0}) < 0.08);
}

TEST_CASE("path endpoints are validated")
{
  OccupancyGrid grid(5, 5);
  grid.set_blocked({2, 2});
  CHECK_THROWS_AS(plan_path(grid, {2, 2}, {0, 0}), std::invalid_argument);
  CHECK_THROWS_AS(plan_path(grid, {0, 0}, {9, 0}), std::invalid_argument);
  const auto same = plan_path(grid, {1, 1}, {1, 1});
  REQUIRE(same);
  CHECK(same->cells.size() == 1);
  CHECK(same->cost == 0.0);
}

TEST_CASE("walled-off goal has no path")
{
  OccupancyGrid grid(5, 5);
  for (int y = 0; y < 5; ++y)
  {
    grid.set_blocked({2, y});
  }
  CHECK_FALSE(plan_path(grid, {0, 0}, {4, 4}));
}

TEST_CASE("diagonal moves may not cut corners")
{
  OccupancyGrid grid(2, 2);
  grid.set_blocked({1, 0});
  const auto p = plan_path(grid, {0, 0}, {1, 1});
  REQUIRE(p);
  CHECK(p->cells.size() == 3);
  CHECK(p->cost == doctest::Approx(2.0));
}

TEST_CASE("A* matches Dijkstra on random grids")
{
  std::mt19937 rng(23);
  for (int trial = 0; trial < 60; ++trial)
  {
    const auto grid = testing_support::random_grid(rng, 24, 24, 0.3);
    const Cell s = testing_support::random_free_cell(rng, grid);
    const Cell g = testing_support::random_free_cell(rng, grid);
    const auto want = oracle::dijkstra(grid, s, g);
    const auto got = plan_path(grid, s, g);
    REQUIRE(got.has_value() == want.has_value());
    if (!got)
    {
      continue;
    }
    CHECK(got->cells.front() == s);
    CHECK(got->cells.back() == g);
    const auto moves = oracle::path_moves(grid, got->cells);
    REQUIRE(moves);
    CHECK(*moves == *want);
    CHECK(got->cost == doctest::Approx(want->value()));
  }
}

TEST_CASE("stance is a free cell near the object facing it")
{
  const auto scene = load_scene(data_dir() / "scenes" / "convenience_store.json");
  const auto grid = OccupancyGrid::from_scene(scene);
  for (const auto& obj : scene.object_points)
  {
    const Pose stance = select_stance(grid, obj);
    const Cell c = grid.cell_of(stance.position);
    CHECK_FALSE(grid.blocked(c));
    CHECK(c != grid.cell_of(obj.position));
    const Vec3 flat{obj.position.x, obj.position.y, stance.position.z};
    CHECK(distance(stance.position, flat) <= kStanceRadius + 1e-9);
    CHECK(lateral_offset(obj.position, stance) == doctest::Approx(0.0).epsilon(1e-9));
  }
  const auto* microwave = scene.object(5);
  const Pose s = select_stance(grid, *microwave);
  CHECK(s.position.x == doctest::Approx(1.65));
}

TEST_CASE("stance selection fails with the object id when boxed in")
{
  OccupancyGrid grid(20, 20, 0.1);
  for (int y = 0; y < 20; ++y)
  {
    for (int x = 0; x < 20; ++x)
    {
      grid.set_blocked({x, y});
    }
  }
  ObjectPoint obj;
  obj.id = 42;
  obj.position = {1.0, 1.0, 0.5};
  try
  {
    select_stance(grid, obj);
    FAIL("expected failure");
  }
  catch (const Error& e)
  {
    CHECK(e.kind() == Error::Kind::Navigation);
    CHECK(std::string(e.what()).find("42") != std::string::npos);
  }
}

TEST_CASE("effect rules gate primitives on object state")
{
  const auto scene = cabinet();
  const auto start = WorldState::initial(scene, kOrigin);

  SUBCASE("press with the door open is rejected")
  {
    const auto opened = update_world(start, sequence({tuple(HandPrimitive::Idle, {}, HandPrimitive::Pull, 10)}),
                                     "open", scene, 1.0);
    CHECK(opened.object_state(scene, 1).count("open"));
    try
    {
      update_world(opened, sequence({tuple(HandPrimitive::Press, 11, HandPrimitive::Idle, {})}), "press", scene,
                   1.0);
      FAIL("expected failure");
    }
    catch (const ExecutionError& e)
    {
      CHECK(e.violation().kind == ViolationKind::Affordance);
      CHECK(e.violation().hand == Hand::Right);
    }
  }
  SUBCASE("press with the door closed runs")
  {
    const auto done = update_world(start, sequence({tuple(HandPrimitive::Press, 11, HandPrimitive::Idle, {})}),
                                   "press", scene, 1.0);
    CHECK(done.point_states.at(11).count("running"));
    CHECK_FALSE(done.point_states.at(11).count("idle"));
    CHECK(done.completed_goals == std::vector<std::string>{"press"});
  }
  SUBCASE("order-dependent tuples are rejected")
  {
    // pulling opens the door, which makes the press fail in one order only
    auto outcome = execute_tuple(start, tuple(HandPrimitive::Press, 11, HandPrimitive::Pull, 10), scene, 1.0);
    REQUIRE(std::holds_alternative<Violation>(outcome));
    CHECK(std::get<Violation>(outcome).kind == ViolationKind::DuplicateTarget);
  }
  SUBCASE("empty sequences are rejected")
  {
    CHECK_THROWS_AS(update_world(start, ActionSequence{}, "nothing", scene, 1.0), Error);
  }
  SUBCASE("out of reach is a zone violation")
  {
    auto outcome = execute_tuple(start, tuple(HandPrimitive::Press, 11, HandPrimitive::Idle, {}), scene, 0.1);
    REQUIRE(std::holds_alternative<Violation>(outcome));
    CHECK(std::get<Violation>(outcome).kind == ViolationKind::Zone);
  }
}

TEST_CASE("grasp and put move objects")
{
  const auto scene = cabinet();
  auto s = WorldState::initial(scene, kOrigin);
  s = update_world(s, sequence({tuple(HandPrimitive::Grasp, 20, HandPrimitive::Idle, {})}), "grab", scene, 1.0);
  REQUIRE(s.hands.right);
  CHECK(s.object_locations.at(2).kind == ObjectLocation::Kind::InHand);
  const auto view = current_view(scene, s);
  CHECK(distance(view.point(20)->position, kOrigin.position) < 1e-9);

  s = update_world(s, sequence({tuple(HandPrimitive::Put, 12, HandPrimitive::Idle, {})}), "put", scene, 1.0);
  CHECK_FALSE(s.hands.right);
  CHECK(s.object_locations.at(2).kind == ObjectLocation::Kind::AtPoint);
  CHECK(s.object_locations.at(2).point == 12);

  TaskSpec task;
  task.goal_predicates.push_back(LocatedGoal{"cup", 12, 0.1});
  CHECK(evaluate_goal(task, s, scene));
  task.goal_predicates.push_back(HeldGoal{"cup"});
  CHECK_FALSE(evaluate_goal(task, s, scene));
}

TEST_CASE("goal evaluation rejects unknown references")
{
  const auto scene = cabinet();
  const auto s = WorldState::initial(scene, kOrigin);
  TaskSpec task;
  task.goal_predicates.push_back(StateGoal{999, std::nullopt, "open"});
  CHECK_THROWS_AS(evaluate_goal(task, s, scene), Error);
  TaskSpec by_label;
  by_label.goal_predicates.push_back(StateGoal{std::nullopt, std::string("cabinet"), "closed"});
  CHECK(evaluate_goal(by_label, s, scene));
}

TEST_CASE("stripping descriptors keeps geometry and affordances")
{
  const auto scene = cabinet();
  const auto bare = strip_descriptors(scene);
  CHECK(bare.point(10)->descriptor.visual_attributes.empty());
  CHECK(bare.point(10)->descriptor.state_tags.empty());
  CHECK(bare.point(10)->descriptor.affordances == scene.point(10)->descriptor.affordances);
  CHECK(bare.point(10)->position == scene.point(10)->position);
}

TEST_CASE("heating the lunch box leaves it inside a closed, started microwave")
{
  const auto scene = load_scene(data_dir() / "scenes" / "convenience_store.json");
  const auto task = load_task(data_dir() / "tasks" / "heat_lunch_box.json");
  TrialConfig cfg;
  cfg.merge = false;
  const auto report = run_trial(scene, task, fixture_kb(), cfg);
  REQUIRE(report.success);
  REQUIRE(report.final_state);
  const auto& s = *report.final_state;
  CHECK(s.object_locations.at(6).kind == ObjectLocation::Kind::InsidePoint);
  CHECK(s.object_locations.at(6).point == 18);
  const auto tags = s.object_state(scene, 5);
  CHECK(tags.count("closed"));
  CHECK(tags.count("started"));
  CHECK_FALSE(s.hands.right);
  CHECK_FALSE(s.hands.left);
  CHECK(s.completed_goals.size() == 2);
}

TEST_CASE("trial reports stage errors instead of throwing")
{
  const auto scene = load_scene(data_dir() / "scenes" / "convenience_store.json");
  TaskSpec task;
  task.name = "bad";
  task.intents.push_back({Verb::Acquire, "spaceship", std::nullopt});
  const auto report = run_trial(scene, task, fixture_kb());
  CHECK_FALSE(report.success);
  REQUIRE(report.error);
  CHECK(report.error->kind == "unresolved-label");
}

TEST_CASE("fixture trials reach their goals")
{
  for (const auto& [file, ops] : std::vector<std::pair<std::string, int>>{{"buy_two_colas.json", 2},
                                                                          {"heat_lunch_box.json", 3},
                                                                          {"make_coffee.json", 2},
                                                                          {"pour_tea.json", 2},
                                                                          {"throw_trash.json", 2},
                                                                          {"water_flower.json", 2}})
  {
    const auto task = load_task(data_dir() / "tasks" / file);
    const auto scene = load_scene(*task.scene_path);
    const auto report = run_trial(scene, task, fixture_kb());
    CAPTURE(file);
    CHECK(report.success);
    CHECK(report.goal_met);
    CHECK(report.violations.empty());
    CHECK(report.operation_count == ops);
    CHECK(report.path_length > 0.0);
  }
}
