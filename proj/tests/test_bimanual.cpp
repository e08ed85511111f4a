#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "support.hpp"

#include "biman/bimanual.hpp"

using namespace biman;
using testing_support::data_dir;
using testing_support::fixture_kb;

namespace
{

const SceneDocument& store()
{
  static const SceneDocument s = load_scene(data_dir() / "scenes" / "convenience_store.json");
  return s;
}

const Pose kMicrowaveStance{{1.65, 6.9, 1.0}, 0.0};
const Pose kShelfStance{{1.65, 0.75, 1.0}, 0.0};

HandState holding(std::optional<std::pair<int, std::string>> right, std::optional<std::pair<int, std::string>> left)
{
  HandState h;
  if (right)
  {
    h.right = HeldObject{right->first, right->second};
  }
  if (left)
  {
    h.left = HeldObject{left->first, left->second};
  }
  return h;
}

BimanualTuple tuple(HandPrimitive r, std::optional<int> rp, HandPrimitive l, std::optional<int> lp)
{
  BimanualTuple t;
  t.right = {r, rp, ""};
  t.left = {l, lp, ""};
  return t;
}

std::vector<ViolationKind> kinds(const std::vector<Violation>& vs)
{
  std::vector<ViolationKind> out;
  for (const auto& v : vs)
  {
    out.push_back(v.kind);
  }
  return out;
}

bool has(const std::vector<Violation>& vs, ViolationKind k)
{
  const auto ks = kinds(vs);
  return std::find(ks.begin(), ks.end(), k) != ks.end();
}

}  // namespace

TEST_CASE("primitive and affordance compatibility")
{
  CHECK(primitive_compatible(HandPrimitive::Grasp, {"grab"}));
  CHECK_FALSE(primitive_compatible(HandPrimitive::Grasp, {"push"}));
  CHECK(primitive_compatible(HandPrimitive::Put, {"put-on"}));
  CHECK(primitive_compatible(HandPrimitive::Put, {"release-into"}));
  CHECK(primitive_compatible(HandPrimitive::Release, {"release-into"}));
  CHECK_FALSE(primitive_compatible(HandPrimitive::Release, {"put-on"}));
  CHECK(primitive_compatible(HandPrimitive::Pour, {"pour-into"}));
  CHECK_FALSE(primitive_compatible(HandPrimitive::Pour, {"pour-from"}));
  CHECK(primitive_compatible(HandPrimitive::Idle, {}));
}

TEST_CASE("microwave skill binds with the held item elided")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  const auto* skill = fixture_kb().find("release an item into an appliance and start it");
  REQUIRE(skill);
  const auto res = bind_prototype(*skill, reach, holding(std::pair{6, "lunch box"}, std::nullopt), store(),
                                  BindOptions{{"lunch box", "microwave"}});
  REQUIRE(res.ok);
  CHECK_FALSE(res.reversed);
  CHECK(res.slots.at("item").held);
  CHECK(res.slots.at("handle").point == 17);
  CHECK(res.slots.at("interior").point == 18);
  CHECK(res.slots.at("button").point == 19);
}

TEST_CASE("a busy right hand mirrors a reversible skill")
{
  const auto reach = sample_reachable(store(), kShelfStance, 1.0);
  const auto* skill = fixture_kb().find("grasp a single item");
  const auto res = bind_prototype(*skill, reach, holding(std::pair{3, "right cola"}, std::nullopt), store(),
                                  BindOptions{{"left cola"}});
  REQUIRE(res.ok);
  CHECK(res.reversed);
  CHECK(res.slots.at("item").point == 12);

  // The right cola sits in the right zone, out of the left hand's range.
  CHECK_FALSE(bind_prototype(*skill, reach, holding(std::pair{2, "left cola"}, std::nullopt), store(),
                             BindOptions{{"right cola"}})
                .ok);
}

TEST_CASE("two-hand grasp puts each cola in the hand on its side")
{
  const auto reach = sample_reachable(store(), kShelfStance, 1.0);
  const auto* skill = fixture_kb().find("grasp an item with each hand");
  const auto res = bind_prototype(*skill, reach, {}, store(), BindOptions{{"left cola", "right cola"}});
  REQUIRE(res.ok);
  CHECK(res.slots.at("left_item").point == 12);
  CHECK(res.slots.at("right_item").point == 13);
}

TEST_CASE("binding failure lists each rejected point")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  const auto* skill = fixture_kb().find("operate an appliance with a held item");
  const auto res = bind_prototype(*skill, reach, holding(std::pair{6, "lunch box"}, std::nullopt), store());
  CHECK_FALSE(res.ok);
  CHECK(res.failure.find("tray") != std::string::npos);
  CHECK(res.failure.find("point 18") != std::string::npos);
  CHECK(res.failure.find("mirrored") != std::string::npos);
}

TEST_CASE("focus labels restrict candidates")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  const auto* skill = fixture_kb().find("grasp a single item");
  CHECK(bind_prototype(*skill, reach, {}, store(), BindOptions{{"lunch box"}}).ok);
  CHECK_FALSE(bind_prototype(*skill, reach, {}, store(), BindOptions{{"microwave"}}).ok);
}

TEST_CASE("binding agrees with exhaustive enumeration")
{
  std::mt19937 rng(17);
  const auto& kb = fixture_kb();
  int feasible = 0;
  for (int trial = 0; trial < 150; ++trial)
  {
    const auto scene = testing_support::random_scene(rng, 6, 1.6);
    const Pose stance{{testing_support::uniform(rng, 0.0, 1.6), testing_support::uniform(rng, 0.0, 1.6), 0.8},
                      testing_support::uniform(rng, -3.1, 3.1)};
    const auto reach = sample_reachable(scene, stance, 1.2);
    HandState hands;
    if (testing_support::pick(rng, 0, 1))
    {
      hands.right = HeldObject{1, scene.object(1)->label};
    }
    if (testing_support::pick(rng, 0, 1))
    {
      hands.left = HeldObject{2, scene.object(2)->label};
    }
    std::vector<std::string> focus;
    if (testing_support::pick(rng, 0, 2) == 0)
    {
      focus.push_back(scene.object(static_cast<int>(testing_support::pick(rng, 1, 6)))->label);
    }
    for (const auto& entry : kb.entries())
    {
      const auto as_written = oracle::enumerate_bindings(entry, reach, hands, scene, focus, false);
      const auto mirrored = entry.hand_preconditions.reversible
                              ? oracle::enumerate_bindings(entry, reach, hands, scene, focus, true)
                              : std::vector<oracle::Assignment>{};
      const auto res = bind_prototype(entry, reach, hands, scene, BindOptions{focus});
      CHECK(res.ok == (!as_written.empty() || !mirrored.empty()));
      if (!res.ok)
      {
        continue;
      }
      ++feasible;
      CHECK(res.reversed == as_written.empty());
      std::map<std::string, std::optional<int>> got;
      for (const auto& [slot, b] : res.slots)
      {
        got[slot] = b.held ? std::nullopt : b.point;
      }
      const auto& pool = res.reversed ? mirrored : as_written;
      CHECK(std::any_of(pool.begin(), pool.end(), [&](const oracle::Assignment& a) { return a.slots == got; }));
    }
  }
  CHECK(feasible > 100);
}

TEST_CASE("generated sequences validate and explain themselves")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  PlanStep step;
  step.object_point = 5;
  step.goal_text = "open the microwave door and place the lunch box inside";
  step.best_skill = "release an item into an appliance and start it";
  step.focus_labels = {"lunch box", "microwave"};
  const auto hands = holding(std::pair{6, "lunch box"}, std::nullopt);
  const auto seq = generate_tuples(step, hands, reach, fixture_kb(), store());
  REQUIRE(seq.tuples.size() == 3);
  CHECK(seq.tuples[0].right.primitive == HandPrimitive::Idle);
  CHECK(seq.tuples[0].left.primitive == HandPrimitive::Pull);
  CHECK(seq.tuples[1].right.primitive == HandPrimitive::Release);
  CHECK(seq.tuples[1].right.reason == "right is holding lunch box; point 18 affords release");
  CHECK(seq.tuples[2].left.primitive == HandPrimitive::Push);
  CHECK(validate_sequence(seq, hands, index_points(reach), store()).empty());
}

TEST_CASE("generation without prototypes fails validation on two-hand steps")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  PlanStep step;
  step.object_point = 5;
  step.goal_text = "heat";
  step.best_skill = "release an item into an appliance and start it";
  step.focus_labels = {"lunch box", "microwave"};
  GenerateOptions opts;
  opts.skill_rag = false;
  try
  {
    generate_tuples(step, {}, reach, fixture_kb(), store(), opts);
    FAIL("expected failure");
  }
  catch (const Error& e)
  {
    CHECK(e.kind() == Error::Kind::Generation);
  }
}

TEST_CASE("validator flags each kind of violation")
{
  const auto reach = sample_reachable(store(), kMicrowaveStance, 1.0);
  const auto by_id = index_points(reach);
  const auto check = [&](const BimanualTuple& t, const HandState& hands) {
    ActionSequence seq;
    seq.tuples.push_back(t);
    return validate_sequence(seq, hands, by_id, store());
  };
  const auto lunch = holding(std::pair{6, "lunch box"}, std::nullopt);

  CHECK(has(check(tuple(HandPrimitive::Idle, {}, HandPrimitive::Idle, {}), {}), ViolationKind::Binding));
  CHECK(has(check(tuple(HandPrimitive::Press, 19, HandPrimitive::Press, 19), {}), ViolationKind::DuplicateTarget));
  CHECK(has(check(tuple(HandPrimitive::Idle, {}, HandPrimitive::Press, 19), {}), ViolationKind::Zone));
  CHECK(has(check(tuple(HandPrimitive::Grasp, 18, HandPrimitive::Idle, {}), {}), ViolationKind::Affordance));
  CHECK(has(check(tuple(HandPrimitive::Grasp, 20, HandPrimitive::Idle, {}), lunch), ViolationKind::HandState));
  CHECK(has(check(tuple(HandPrimitive::Release, 18, HandPrimitive::Idle, {}), {}), ViolationKind::HandState));
  CHECK(has(check(tuple(HandPrimitive::Press, 12, HandPrimitive::Idle, {}), {}), ViolationKind::Binding));
  CHECK(has(check(tuple(HandPrimitive::Idle, 19, HandPrimitive::Pull, 17), {}), ViolationKind::Binding));
  CHECK(check(tuple(HandPrimitive::Release, 18, HandPrimitive::Pull, 17), lunch).empty());
}

TEST_CASE("hand state advances through grasp and release")
{
  BimanualTuple grab = tuple(HandPrimitive::Grasp, 20, HandPrimitive::Idle, {});
  const auto after = advance_hands({}, grab, store());
  REQUIRE(after.right);
  CHECK(after.right->label == "lunch box");
  CHECK(after.hand_holding(6) == Hand::Right);
  const auto released = advance_hands(after, tuple(HandPrimitive::Release, 18, HandPrimitive::Idle, {}), store());
  CHECK_FALSE(released.right);
}
