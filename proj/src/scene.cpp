#include "biman/scene.hpp"

#include "biman/json_util.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace biman
{

const ObjectPoint* SceneDocument::object(int id) const
{
  auto it = std::lower_bound(object_points.begin(), object_points.end(), id,
                             [](const ObjectPoint& o, int v) { return o.id < v; });
  return it != object_points.end() && it->id == id ? &*it : nullptr;
}

const InteractionPoint* SceneDocument::point(int id) const
{
  auto it = std::lower_bound(interaction_points.begin(), interaction_points.end(), id,
                             [](const InteractionPoint& p, int v) { return p.id < v; });
  return it != interaction_points.end() && it->id == id ? &*it : nullptr;
}

ObjectPoint& SceneDocument::object_mut(int id)
{
  auto* o = object(id);
  if (!o)
  {
    throw Error(Error::Kind::DanglingReference, "unknown object point " + std::to_string(id));
  }
  return const_cast<ObjectPoint&>(*o);
}

InteractionPoint& SceneDocument::point_mut(int id)
{
  auto* p = point(id);
  if (!p)
  {
    throw Error(Error::Kind::DanglingReference, "unknown interaction point " + std::to_string(id));
  }
  return const_cast<InteractionPoint&>(*p);
}

std::vector<const InteractionPoint*> SceneDocument::points_of(int object_id) const
{
  std::vector<const InteractionPoint*> out;
  for (const auto& p : interaction_points)
  {
    if (p.parent_object == object_id)
    {
      out.push_back(&p);
    }
  }
  return out;
}

bool AdjacencyGraph::adjacent(int a, int b) const
{
  if (a == b)
  {
    return false;
  }
  return edges.count({std::min(a, b), std::max(a, b)}) > 0;
}

namespace
{

EffectRule parse_effect(const json& j, const std::string& path)
{
  EffectRule rule;
  auto prim = parse_primitive(get_string(j, "primitive", path));
  if (!prim || *prim == HandPrimitive::Idle)
  {
    throw Error(Error::Kind::Schema, path + ".primitive: unknown primitive", path + ".primitive");
  }
  rule.primitive = *prim;
  rule.required_state = get_tags(j, "required_state", path, false);
  rule.removes = get_tags(j, "removes", path, false);
  rule.adds = get_tags(j, "adds", path, false);
  for (const auto& t : rule.adds)
  {
    if (rule.removes.count(t))
    {
      throw Error(Error::Kind::Schema, path + ": tag '" + t + "' both added and removed", path);
    }
  }
  return rule;
}

Descriptor parse_descriptor(const json& j, const std::string& path)
{
  Descriptor d;
  d.part_label = get_string(j, "part_label", path);
  d.visual_attributes = get_tags(j, "visual_attributes", path, false);
  d.affordances = get_tags(j, "affordances", path, false);
  for (const auto& a : d.affordances)
  {
    if (!known_affordances().count(a))
    {
      throw Error(Error::Kind::Schema, path + ".affordances: unknown affordance '" + a + "'",
                  path + ".affordances");
    }
  }
  d.state_tags = get_tags(j, "state_tags", path, false);
  if (j.contains("sibling_ids"))
  {
    for (const auto& v : j.at("sibling_ids"))
    {
      if (!v.is_number_integer())
      {
        throw Error(Error::Kind::Schema, path + ".sibling_ids: expected integers", path + ".sibling_ids");
      }
      d.sibling_ids.insert(v.get<int>());
    }
  }
  if (j.contains("effects"))
  {
    const auto& arr = j.at("effects");
    if (!arr.is_array())
    {
      throw Error(Error::Kind::Schema, path + ".effects: expected array", path + ".effects");
    }
    for (size_t i = 0; i < arr.size(); ++i)
    {
      d.effects.push_back(parse_effect(arr[i], path + ".effects[" + std::to_string(i) + "]"));
    }
  }
  return d;
}

void validate(SceneDocument& scene)
{
  for (size_t i = 1; i < scene.object_points.size(); ++i)
  {
    if (scene.object_points[i].id == scene.object_points[i - 1].id)
    {
      const int id = scene.object_points[i].id;
      throw Error(Error::Kind::DuplicateId, "duplicate object point id " + std::to_string(id),
                  "object_points");
    }
  }
  for (size_t i = 1; i < scene.interaction_points.size(); ++i)
  {
    if (scene.interaction_points[i].id == scene.interaction_points[i - 1].id)
    {
      const int id = scene.interaction_points[i].id;
      throw Error(Error::Kind::DuplicateId, "duplicate interaction point id " + std::to_string(id),
                  "interaction_points");
    }
  }
  for (const auto& p : scene.interaction_points)
  {
    const std::string path = "interaction_points[id=" + std::to_string(p.id) + "]";
    if (!scene.object(p.parent_object))
    {
      throw Error(Error::Kind::DanglingReference,
                  path + ".parent_object: unknown object point " + std::to_string(p.parent_object),
                  path + ".parent_object");
    }
    for (int s : p.descriptor.sibling_ids)
    {
      const auto* sib = scene.point(s);
      if (!sib)
      {
        throw Error(Error::Kind::DanglingReference,
                    path + ".descriptor.sibling_ids: unknown interaction point " + std::to_string(s),
                    path + ".descriptor.sibling_ids");
      }
      if (sib->parent_object != p.parent_object || s == p.id)
      {
        throw Error(Error::Kind::Schema,
                    path + ".descriptor.sibling_ids: point " + std::to_string(s) +
                      " does not share parent object " + std::to_string(p.parent_object),
                    path + ".descriptor.sibling_ids");
      }
    }
  }
}

bool inside_footprint(const Box& b, double x, double y)
{
  return x >= b.min.x && x <= b.max.x && y >= b.min.y && y <= b.max.y;
}

/// Warns about object points whose whole stance neighbourhood (0.8 m disc,
/// sampled every 0.1 m) lies inside obstacle footprints.
void check_stance_space(SceneDocument& scene)
{
  for (const auto& o : scene.object_points)
  {
    bool open = false;
    for (int i = -8; i <= 8 && !open; ++i)
    {
      for (int j = -8; j <= 8 && !open; ++j)
      {
        if (i * i + j * j > 64 || (i == 0 && j == 0))
        {
          continue;
        }
        const double x = o.position.x + 0.1 * i;
        const double y = o.position.y + 0.1 * j;
        open = std::none_of(scene.obstacles.begin(), scene.obstacles.end(),
                            [&](const Box& b) { return inside_footprint(b, x, y); });
      }
    }
    if (!open)
    {
      scene.warnings.push_back("object point " + std::to_string(o.id) + " ('" + o.label +
                               "') has no free stance space around it");
    }
  }
}

}  // namespace

SceneDocument parse_scene(std::string_view json_text)
{
  const json doc = parse_json(json_text);
  if (!doc.is_object())
  {
    throw Error(Error::Kind::Parse, "scene document must be a JSON object");
  }
  if (doc.contains("schema") && doc.at("schema") != "scene.v1")
  {
    throw Error(Error::Kind::Schema, "unsupported scene schema " + doc.at("schema").dump(), "schema");
  }

  SceneDocument scene;
  scene.scene_label = doc.value("scene_label", "");
  if (doc.contains("command_list"))
  {
    for (const auto& c : doc.at("command_list"))
    {
      scene.command_list.push_back(c.get<std::string>());
    }
  }

  const json& objects = get_array(doc, "object_points", "");
  for (size_t i = 0; i < objects.size(); ++i)
  {
    const std::string path = "object_points[" + std::to_string(i) + "]";
    ObjectPoint o;
    o.id = get_int(objects[i], "id", path);
    o.position = get_vec3(objects[i], "position", path);
    o.label = get_string(objects[i], "label", path);
    if (o.label.empty())
    {
      throw Error(Error::Kind::Schema, path + ".label: must be non-empty", path + ".label");
    }
    scene.object_points.push_back(std::move(o));
  }

  const json& points = get_array(doc, "interaction_points", "");
  for (size_t i = 0; i < points.size(); ++i)
  {
    const std::string path = "interaction_points[" + std::to_string(i) + "]";
    InteractionPoint p;
    p.id = get_int(points[i], "id", path);
    p.position = get_vec3(points[i], "position", path);
    p.parent_object = get_int(points[i], "parent_object", path);
    if (!points[i].contains("descriptor"))
    {
      throw Error(Error::Kind::Schema, path + ".descriptor: missing", path + ".descriptor");
    }
    p.descriptor = parse_descriptor(points[i].at("descriptor"), path + ".descriptor");
    scene.interaction_points.push_back(std::move(p));
  }

  if (doc.contains("obstacles"))
  {
    const json& obs = get_array(doc, "obstacles", "");
    for (size_t i = 0; i < obs.size(); ++i)
    {
      const std::string path = "obstacles[" + std::to_string(i) + "]";
      Box b{get_vec3(obs[i], "min", path), get_vec3(obs[i], "max", path)};
      if (b.min.x > b.max.x || b.min.y > b.max.y || b.min.z > b.max.z)
      {
        throw Error(Error::Kind::Schema, path + ": min exceeds max", path);
      }
      scene.obstacles.push_back(b);
    }
  }

  if (doc.contains("agent_start"))
  {
    const json& a = doc.at("agent_start");
    Pose start;
    start.position = get_vec3(a, "position", "agent_start");
    start.yaw = a.contains("yaw") ? get_double(a, "yaw", "agent_start") : 0.0;
    scene.agent_start = start;
  }

  if (doc.contains("metadata") && doc.at("metadata").is_object())
  {
    for (const auto& [k, v] : doc.at("metadata").items())
    {
      scene.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
  }

  std::sort(scene.object_points.begin(), scene.object_points.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  std::sort(scene.interaction_points.begin(), scene.interaction_points.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  validate(scene);
  check_stance_space(scene);
  return scene;
}

SceneDocument load_scene(const std::filesystem::path& file)
{
  return parse_scene(read_file(file));
}

AdjacencyGraph build_adjacency_serial(const SceneDocument& scene, double threshold)
{
  if (!(threshold > 0.0))
  {
    throw std::invalid_argument("adjacency threshold must be positive");
  }
  AdjacencyGraph g;
  g.threshold = threshold;
  const auto& objs = scene.object_points;
  for (size_t i = 0; i < objs.size(); ++i)
  {
    for (size_t j = i + 1; j < objs.size(); ++j)
    {
      if (distance(objs[i].position, objs[j].position) <= threshold)
      {
        g.edges.insert({std::min(objs[i].id, objs[j].id), std::max(objs[i].id, objs[j].id)});
      }
    }
  }
  return g;
}

AdjacencyGraph build_adjacency(const SceneDocument& scene, double threshold)
{
  if (!(threshold > 0.0))
  {
    throw std::invalid_argument("adjacency threshold must be positive");
  }
  const auto& objs = scene.object_points;
  const long n = static_cast<long>(objs.size());
  std::vector<std::vector<std::pair<int, int>>> rows(objs.size());

#pragma omp parallel for schedule(dynamic, 8) if (n > 64)
  for (long i = 0; i < n; ++i)
  {
    auto& row = rows[i];
    for (long j = i + 1; j < n; ++j)
    {
      if (distance(objs[i].position, objs[j].position) <= threshold)
      {
        row.emplace_back(std::min(objs[i].id, objs[j].id), std::max(objs[i].id, objs[j].id));
      }
    }
  }

  AdjacencyGraph g;
  g.threshold = threshold;
  for (const auto& row : rows)
  {
    g.edges.insert(row.begin(), row.end());
  }
  return g;
}

double lateral_offset(const Vec3& point, const Pose& stance)
{
  const double dx = point.x - stance.position.x;
  const double dy = point.y - stance.position.y;
  // left axis of the agent frame is the heading rotated by +90 degrees
  return -std::sin(stance.yaw) * dx + std::cos(stance.yaw) * dy;
}

Zone assign_zone(const Vec3& point_position, const Pose& stance)
{
  const double lateral = lateral_offset(point_position, stance);
  if (lateral > kZoneHalfWidth)
  {
    return Zone::Left;
  }
  if (lateral < -kZoneHalfWidth)
  {
    return Zone::Right;
  }
  return Zone::Mid;
}

std::vector<ReachablePoint> sample_reachable(const SceneDocument& scene, const Pose& stance,
                                             double reach_threshold)
{
  if (!(reach_threshold > 0.0))
  {
    throw std::invalid_argument("reach threshold must be positive");
  }
  std::vector<ReachablePoint> out;
  for (const auto& p : scene.interaction_points)
  {
    if (distance(p.position, stance.position) <= reach_threshold)
    {
      out.push_back({&p, assign_zone(p.position, stance), lateral_offset(p.position, stance)});
    }
  }
  return out;
}

namespace
{
std::string bracket(const TagSet& tags)
{
  return "[" + join(std::vector<std::string>(tags.begin(), tags.end()), ",") + "]";
}
}  // namespace

std::string concat_descriptors(const SceneDocument& scene, std::vector<ReachablePoint> points)
{
  std::sort(points.begin(), points.end(), [](const ReachablePoint& a, const ReachablePoint& b) {
    if (a.point->id != b.point->id)
    {
      return a.point->id < b.point->id;
    }
    return a.zone < b.zone;
  });

  std::ostringstream out;
  for (const auto& rp : points)
  {
    const auto& d = rp.point->descriptor;
    const auto* parent = scene.object(rp.point->parent_object);
    std::vector<std::string> sibs;
    for (int s : d.sibling_ids)
    {
      sibs.push_back(std::to_string(s));
    }
    out << '[' << rp.point->id << "] object=" << (parent ? parent->label : "?")
        << " part=" << d.part_label << " attrs=" << bracket(d.visual_attributes)
        << " afford=" << bracket(d.affordances) << " state=" << bracket(d.state_tags)
        << " siblings=[" << join(sibs, ",") << "] zone=" << to_string(rp.zone) << '\n';
  }
  return out.str();
}

}  // namespace biman
