#include "biman/matching.hpp"

namespace biman
{

std::optional<std::string> template_rejection(const PointTemplate& tmpl, const InteractionPoint& point,
                                              std::string_view parent_label)
{
  if (tmpl.object_category != kWildcard &&
      to_lower(parent_label).find(to_lower(tmpl.object_category)) == std::string::npos)
  {
    return "object category '" + tmpl.object_category + "' does not match '" + std::string(parent_label) + "'";
  }
  const auto& d = point.descriptor;
  for (const auto& a : tmpl.required_affordances)
  {
    if (!d.affordances.count(a))
    {
      return "missing affordance '" + a + "'";
    }
  }
  for (const auto& a : tmpl.required_attributes)
  {
    if (!d.visual_attributes.count(a))
    {
      return "missing attribute '" + a + "'";
    }
  }
  for (const auto& s : tmpl.required_state)
  {
    if (!d.state_tags.count(s))
    {
      return "missing state '" + s + "'";
    }
  }
  return std::nullopt;
}

bool grasp_only_slot(const SkillEntry& entry, std::string_view slot)
{
  bool used = false;
  for (const auto& step : entry.tuple_template)
  {
    for (Hand h : kHands)
    {
      const auto& a = step.hand(h);
      if (a.slot && *a.slot == slot)
      {
        if (a.primitive != HandPrimitive::Grasp)
        {
          return false;
        }
        used = true;
      }
    }
  }
  return used;
}

namespace
{
bool meets(HandRequirement req, bool holding)
{
  switch (req)
  {
    case HandRequirement::Free: return !holding;
    case HandRequirement::Holding: return holding;
    case HandRequirement::Any: return true;
  }
  return false;
}
}  // namespace

bool hands_meet(const HandPrecondition& pre, bool right_holding, bool left_holding, bool mirrored)
{
  if (mirrored)
  {
    return meets(pre.right, left_holding) && meets(pre.left, right_holding);
  }
  return meets(pre.right, right_holding) && meets(pre.left, left_holding);
}

}  // namespace biman
