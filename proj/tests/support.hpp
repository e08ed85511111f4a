#pragma once

#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"
#include "biman/world.hpp"

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace testing_support
{

using namespace biman;

inline std::filesystem::path data_dir() { return BIMAN_DATA_DIR; }
inline std::filesystem::path kb_path() { return data_dir() / "skills.json"; }

inline const KnowledgeBase& fixture_kb()
{
  static const KnowledgeBase kb = load_kb(kb_path());
  return kb;
}

inline double uniform(std::mt19937& rng, double lo, double hi)
{
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline int pick(std::mt19937& rng, int lo, int hi)
{
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

template<typename T>
const T& choose(std::mt19937& rng, const std::vector<T>& v)
{
  return v[static_cast<size_t>(pick(rng, 0, static_cast<int>(v.size()) - 1))];
}

/// Random scene without effect rules. Objects lie in a `size` x `size` square;
/// each part sits within 0.3 m of its object. Point ids start at 100.
inline SceneDocument random_scene(std::mt19937& rng, int objects, double size = 5.0)
{
  static const std::vector<std::string> kNames = {"cup", "box", "door", "bin", "can", "tray", "lamp", "jar"};
  static const std::vector<std::string> kAttrs = {"hinged", "exposed", "enclosed", "wall-mounted", "red",
                                                  "flat", "potted", "lift-up"};
  const std::vector<std::string> affs(known_affordances().begin(), known_affordances().end());

  SceneDocument scene;
  int next_point = 100;
  for (int i = 1; i <= objects; ++i)
  {
    ObjectPoint o;
    o.id = i;
    o.label = choose(rng, kNames) + " " + std::to_string(i);
    o.position = {uniform(rng, 0.0, size), uniform(rng, 0.0, size), uniform(rng, 0.3, 1.2)};
    scene.object_points.push_back(o);
    const int parts = pick(rng, 1, 3);
    std::vector<int> ids;
    for (int k = 0; k < parts; ++k)
    {
      InteractionPoint p;
      p.id = next_point++;
      p.parent_object = i;
      p.position = o.position + Vec3{uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -0.1, 0.1)};
      p.descriptor.part_label = "part " + std::to_string(k);
      const int n_aff = pick(rng, 1, 3);
      for (int a = 0; a < n_aff; ++a)
      {
        p.descriptor.affordances.insert(choose(rng, affs));
      }
      if (pick(rng, 0, 2) == 0)
      {
        p.descriptor.visual_attributes.insert(choose(rng, kAttrs));
      }
      if (p.descriptor.affordances.count("pour-from"))
      {
        p.descriptor.state_tags.insert("filled");
      }
      if (pick(rng, 0, 3) == 0)
      {
        p.descriptor.state_tags.insert(pick(rng, 0, 1) ? "closed" : "open");
      }
      ids.push_back(p.id);
      scene.interaction_points.push_back(p);
    }
    for (auto& p : scene.interaction_points)
    {
      if (p.parent_object != i)
      {
        continue;
      }
      for (int id : ids)
      {
        if (id != p.id)
        {
          p.descriptor.sibling_ids.insert(id);
        }
      }
    }
  }
  return scene;
}

/// Random grid with roughly `density` of its cells blocked.
inline OccupancyGrid random_grid(std::mt19937& rng, int w, int h, double density)
{
  OccupancyGrid grid(w, h);
  std::bernoulli_distribution block(density);
  for (int y = 0; y < h; ++y)
  {
    for (int x = 0; x < w; ++x)
    {
      grid.set_blocked({x, y}, block(rng));
    }
  }
  return grid;
}

inline Cell random_free_cell(std::mt19937& rng, const OccupancyGrid& grid)
{
  for (;;)
  {
    Cell c{pick(rng, 0, grid.width() - 1), pick(rng, 0, grid.height() - 1)};
    if (!grid.blocked(c))
    {
      return c;
    }
  }
}

/// Random skill names over a small vocabulary so that ties and shared words occur.
inline std::vector<std::string> random_skill_names(std::mt19937& rng, int n)
{
  static const std::vector<std::string> kWords = {"grasp", "open",  "door", "item", "pour", "cup",  "press",
                                                  "button", "place", "held", "two",  "hands", "lid", "into"};
  std::vector<std::string> names;
  while (static_cast<int>(names.size()) < n)
  {
    std::string name;
    const int len = pick(rng, 1, 5);
    for (int i = 0; i < len; ++i)
    {
      name += (i ? " " : "") + choose(rng, kWords);
    }
    name += " " + std::to_string(names.size());
    names.push_back(name);
  }
  return names;
}

inline SkillEntry simple_entry(const std::string& name)
{
  SkillEntry e;
  e.name = name;
  e.coordination = Coordination::Unimanual;
  TemplateStep step;
  step.right = {HandPrimitive::Press, std::string("button")};
  e.tuple_template.push_back(step);
  PointTemplate t;
  t.slot = "button";
  t.required_affordances = {"press"};
  e.point_preconditions.push_back(t);
  return e;
}

inline std::string random_query(std::mt19937& rng)
{
  static const std::vector<std::string> kWords = {"grasp", "open", "door", "item", "pour", "cup", "press",
                                                  "button", "place", "held", "unknownword", "lid", "a", "the"};
  std::string q;
  const int len = pick(rng, 1, 6);
  for (int i = 0; i < len; ++i)
  {
    q += (i ? " " : "") + choose(rng, kWords);
  }
  return q;
}

}  // namespace testing_support
