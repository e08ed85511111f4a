#include "biman/types.hpp"

#include <algorithm>
#include <cctype>

namespace biman
{

std::string_view to_string(Hand h) { return h == Hand::Right ? "right" : "left"; }

std::string_view to_string(Zone z)
{
  switch (z)
  {
    case Zone::Left: return "left";
    case Zone::Mid: return "mid";
    case Zone::Right: return "right";
  }
  return "mid";
}

namespace
{
constexpr std::array<std::pair<HandPrimitive, std::string_view>, 8> kPrimitiveNames = {{
  {HandPrimitive::Grasp, "grasp"},
  {HandPrimitive::Put, "put"},
  {HandPrimitive::Press, "press"},
  {HandPrimitive::Push, "push"},
  {HandPrimitive::Pull, "pull"},
  {HandPrimitive::Pour, "pour"},
  {HandPrimitive::Release, "release"},
  {HandPrimitive::Idle, "idle"},
}};

constexpr std::array<std::pair<Coordination, std::string_view>, 3> kCoordinationNames = {{
  {Coordination::TwoHandsOneObject, "two-hands-one-object"},
  {Coordination::TwoHandsTwoObjects, "two-hands-two-objects"},
  {Coordination::Unimanual, "unimanual"},
}};
}  // namespace

std::string_view to_string(HandPrimitive p)
{
  for (const auto& [v, name] : kPrimitiveNames)
  {
    if (v == p)
    {
      return name;
    }
  }
  return "idle";
}

std::string_view to_string(Coordination c)
{
  for (const auto& [v, name] : kCoordinationNames)
  {
    if (v == c)
    {
      return name;
    }
  }
  return "unimanual";
}

std::string_view to_string(Error::Kind k)
{
  using K = Error::Kind;
  switch (k)
  {
    case K::Parse: return "parse";
    case K::Schema: return "schema";
    case K::DuplicateId: return "duplicate-id";
    case K::DanglingReference: return "dangling-reference";
    case K::UnresolvedLabel: return "unresolved-label";
    case K::Continuity: return "unsatisfiable-continuity";
    case K::Refinement: return "refinement-failure";
    case K::Generation: return "generation-failure";
    case K::Navigation: return "navigation";
    case K::Evaluation: return "evaluation";
    case K::Io: return "io";
  }
  return "unknown";
}

std::optional<HandPrimitive> parse_primitive(std::string_view s)
{
  for (const auto& [v, name] : kPrimitiveNames)
  {
    if (name == s)
    {
      return v;
    }
  }
  return std::nullopt;
}

std::optional<Coordination> parse_coordination(std::string_view s)
{
  for (const auto& [v, name] : kCoordinationNames)
  {
    if (name == s)
    {
      return v;
    }
  }
  return std::nullopt;
}

std::optional<Hand> parse_hand(std::string_view s)
{
  if (s == "right")
  {
    return Hand::Right;
  }
  if (s == "left")
  {
    return Hand::Left;
  }
  return std::nullopt;
}

const TagSet& known_affordances()
{
  static const TagSet tags = {"grab",     "put-on",    "press",     "push",
                              "pull",     "pour-from", "pour-into", "release-into"};
  return tags;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep)
{
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i)
  {
    if (i)
    {
      out += sep;
    }
    out += parts[i];
  }
  return out;
}

std::string to_lower(std::string_view s)
{
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace biman
