#include "biman/skill_kb.hpp"

#include "biman/json_util.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace biman
{

const PointTemplate* SkillEntry::slot(std::string_view name) const
{
  for (const auto& p : point_preconditions)
  {
    if (p.slot == name)
    {
      return &p;
    }
  }
  return nullptr;
}

std::optional<Hand> SkillEntry::slot_hand(std::string_view slot) const
{
  for (const auto& step : tuple_template)
  {
    for (Hand h : kHands)
    {
      const auto& a = step.hand(h);
      if (a.slot && *a.slot == slot)
      {
        return h;
      }
    }
  }
  return std::nullopt;
}

int SkillEntry::max_active_hands() const
{
  int best = 0;
  for (const auto& step : tuple_template)
  {
    const int n = (step.right.primitive != HandPrimitive::Idle) + (step.left.primitive != HandPrimitive::Idle);
    best = std::max(best, n);
  }
  return best;
}

double EmbeddingVector::dot(const EmbeddingVector& other) const
{
  const auto& small = weights.size() <= other.weights.size() ? weights : other.weights;
  const auto& large = weights.size() <= other.weights.size() ? other.weights : weights;
  double sum = 0.0;
  for (const auto& [tok, w] : small)
  {
    auto it = large.find(tok);
    if (it != large.end())
    {
      sum += w * it->second;
    }
  }
  return sum;
}

double EmbeddingVector::norm() const { return std::sqrt(dot(*this)); }

std::vector<std::string> tokenize(std::string_view text)
{
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text)
  {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c))
    {
      cur.push_back(static_cast<char>(std::tolower(c)));
    }
    else if (!cur.empty())
    {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty())
  {
    tokens.push_back(std::move(cur));
  }
  return tokens;
}

KnowledgeBase::KnowledgeBase(std::vector<SkillEntry> entries) : entries_(std::move(entries))
{
  std::map<std::string, int> df;
  for (const auto& e : entries_)
  {
    const auto toks = tokenize(e.name);
    for (const auto& t : std::set<std::string>(toks.begin(), toks.end()))
    {
      ++df[t];
    }
  }
  // smoothed idf: log((1 + N) / (1 + df)) + 1, so unseen tokens get the maximum weight
  const double n = static_cast<double>(entries_.size());
  for (const auto& [tok, count] : df)
  {
    idf_[tok] = std::log((1.0 + n) / (1.0 + count)) + 1.0;
  }
  unseen_idf_ = std::log(1.0 + n) + 1.0;

  name_embeddings_.reserve(entries_.size());
  for (const auto& e : entries_)
  {
    name_embeddings_.push_back(embed(e.name));
  }
}

const SkillEntry* KnowledgeBase::find(std::string_view name) const
{
  for (const auto& e : entries_)
  {
    if (e.name == name)
    {
      return &e;
    }
  }
  return nullptr;
}

double KnowledgeBase::idf(const std::string& token) const
{
  auto it = idf_.find(token);
  return it == idf_.end() ? unseen_idf_ : it->second;
}

EmbeddingVector KnowledgeBase::embed(std::string_view text) const
{
  EmbeddingVector v;
  for (const auto& t : tokenize(text))
  {
    v.weights[t] += 1.0;
  }
  double sq = 0.0;
  for (auto& [tok, w] : v.weights)
  {
    w *= idf(tok);
    sq += w * w;
  }
  if (sq > 0.0)
  {
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& [tok, w] : v.weights)
    {
      w *= inv;
    }
  }
  return v;
}

EmbeddingVector embed_text(std::string_view text, const KnowledgeBase& kb) { return kb.embed(text); }

double cosine(const EmbeddingVector& a, const EmbeddingVector& b)
{
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0)
  {
    return 0.0;
  }
  return a.dot(b) / (na * nb);
}

namespace
{

bool ranks_before(const ScoredSkill& a, const ScoredSkill& b)
{
  if (a.similarity != b.similarity)
  {
    return a.similarity > b.similarity;
  }
  return a.entry->name < b.entry->name;
}

std::vector<ScoredSkill> take_top(std::vector<ScoredSkill> scored, int k)
{
  const size_t keep = std::min(scored.size(), static_cast<size_t>(k));
  std::partial_sort(scored.begin(), scored.begin() + static_cast<long>(keep), scored.end(), ranks_before);
  scored.resize(keep);
  return scored;
}

}  // namespace

std::vector<ScoredSkill> retrieve_top_k_serial(std::string_view query, int k, const KnowledgeBase& kb)
{
  if (k < 1)
  {
    throw std::invalid_argument("k must be at least 1");
  }
  const auto q = kb.embed(query);
  std::vector<ScoredSkill> scored;
  scored.reserve(kb.size());
  for (size_t i = 0; i < kb.size(); ++i)
  {
    scored.push_back({&kb.entries()[i], cosine(q, kb.name_embedding(i))});
  }
  return take_top(std::move(scored), k);
}

std::vector<ScoredSkill> retrieve_top_k(std::string_view query, int k, const KnowledgeBase& kb)
{
  if (k < 1)
  {
    throw std::invalid_argument("k must be at least 1");
  }
  const auto q = kb.embed(query);
  const long n = static_cast<long>(kb.size());
  std::vector<ScoredSkill> scored(kb.size());

#pragma omp parallel for schedule(static) if (n > 512)
  for (long i = 0; i < n; ++i)
  {
    scored[i] = {&kb.entries()[i], cosine(q, kb.name_embedding(i))};
  }
  return take_top(std::move(scored), k);
}

// ---------------------------------------------------------------------------
// loading

namespace
{

HandRequirement parse_requirement(const std::string& s, const std::string& path)
{
  if (s == "free")
  {
    return HandRequirement::Free;
  }
  if (s == "holding")
  {
    return HandRequirement::Holding;
  }
  if (s == "any")
  {
    return HandRequirement::Any;
  }
  throw Error(Error::Kind::Schema, path + ": expected free|holding|any", path);
}

TemplateAction parse_action(const json& j, const std::string& path)
{
  TemplateAction a;
  auto prim = parse_primitive(get_string(j, "primitive", path));
  if (!prim)
  {
    throw Error(Error::Kind::Schema, path + ".primitive: unknown primitive", path + ".primitive");
  }
  a.primitive = *prim;
  if (j.contains("slot") && !j.at("slot").is_null())
  {
    a.slot = get_string(j, "slot", path);
  }
  return a;
}

SkillEntry parse_entry(const json& j, const std::string& path)
{
  SkillEntry e;
  e.name = get_string(j, "name", path);
  auto coord = parse_coordination(get_string(j, "coordination", path));
  if (!coord)
  {
    throw Error(Error::Kind::Schema, path + ".coordination: unknown coordination type", path + ".coordination");
  }
  e.coordination = *coord;

  const json& steps = get_array(j, "tuple_template", path);
  for (size_t i = 0; i < steps.size(); ++i)
  {
    const std::string sp = path + ".tuple_template[" + std::to_string(i) + "]";
    TemplateStep step;
    step.right = parse_action(get_field(steps[i], "right", sp), sp + ".right");
    step.left = parse_action(get_field(steps[i], "left", sp), sp + ".left");
    e.tuple_template.push_back(std::move(step));
  }

  const json& pts = get_array(j, "point_preconditions", path);
  for (size_t i = 0; i < pts.size(); ++i)
  {
    const std::string pp = path + ".point_preconditions[" + std::to_string(i) + "]";
    PointTemplate t;
    t.slot = get_string(pts[i], "slot", pp);
    t.object_category = pts[i].value("object_category", std::string(kWildcard));
    t.required_affordances = get_tags(pts[i], "required_affordances", pp, false);
    t.required_attributes = get_tags(pts[i], "required_attributes", pp, false);
    t.required_state = get_tags(pts[i], "required_state", pp, false);
    e.point_preconditions.push_back(std::move(t));
  }

  const json& hp = get_field(j, "hand_preconditions", path);
  const std::string hpp = path + ".hand_preconditions";
  e.hand_preconditions.right = parse_requirement(get_string(hp, "right", hpp), hpp + ".right");
  e.hand_preconditions.left = parse_requirement(get_string(hp, "left", hpp), hpp + ".left");
  e.hand_preconditions.reversible = hp.value("reversible", false);
  return e;
}

}  // namespace

void validate_entry(const SkillEntry& e)
{
  std::set<std::string> slots;
  for (const auto& p : e.point_preconditions)
  {
    if (!slots.insert(p.slot).second)
    {
      throw Error(Error::Kind::Schema, "skill '" + e.name + "': duplicate slot '" + p.slot + "'");
    }
  }
  if (e.tuple_template.empty())
  {
    throw Error(Error::Kind::Schema, "skill '" + e.name + "': empty tuple template");
  }
  for (size_t i = 0; i < e.tuple_template.size(); ++i)
  {
    const auto& step = e.tuple_template[i];
    int active = 0;
    for (Hand h : kHands)
    {
      const auto& a = step.hand(h);
      const bool idle = a.primitive == HandPrimitive::Idle;
      if (idle == a.slot.has_value())
      {
        throw Error(Error::Kind::Schema, "skill '" + e.name + "' step " + std::to_string(i) + ": " +
                                           std::string(to_string(h)) + " hand must name a slot iff not idle");
      }
      if (a.slot && !slots.count(*a.slot))
      {
        throw Error(Error::Kind::Schema,
                    "skill '" + e.name + "': template slot '" + *a.slot + "' is not declared in point_preconditions",
                    *a.slot);
      }
      active += !idle;
    }
    if (active == 0)
    {
      throw Error(Error::Kind::Schema, "skill '" + e.name + "' step " + std::to_string(i) + ": both hands idle");
    }
    if (e.coordination == Coordination::Unimanual && active > 1)
    {
      throw Error(Error::Kind::Schema,
                  "skill '" + e.name + "' step " + std::to_string(i) + ": unimanual skill uses both hands");
    }
  }
}

KnowledgeBase parse_kb(std::string_view json_text)
{
  const json doc = parse_json(json_text);
  const json* arr = &doc;
  if (doc.is_object())
  {
    if (doc.contains("schema") && doc.at("schema") != "skills.v1")
    {
      throw Error(Error::Kind::Schema, "unsupported skill schema " + doc.at("schema").dump(), "schema");
    }
    arr = &get_array(doc, "skills", "");
  }
  if (!arr->is_array())
  {
    throw Error(Error::Kind::Schema, "skill document must be an array or {\"skills\": [...]}");
  }

  std::vector<SkillEntry> entries;
  std::set<std::string> names;
  for (size_t i = 0; i < arr->size(); ++i)
  {
    auto e = parse_entry((*arr)[i], "skills[" + std::to_string(i) + "]");
    if (!names.insert(e.name).second)
    {
      throw Error(Error::Kind::DuplicateId, "duplicate skill name '" + e.name + "'",
                  "skills[" + std::to_string(i) + "].name");
    }
    validate_entry(e);
    entries.push_back(std::move(e));
  }
  return KnowledgeBase(std::move(entries));
}

KnowledgeBase load_kb(const std::filesystem::path& file) { return parse_kb(read_file(file)); }

}  // namespace biman
