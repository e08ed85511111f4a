#pragma once

#include "biman/scene.hpp"
#include "biman/skill_kb.hpp"

#include <optional>
#include <string>

namespace biman
{

/// First predicate of `tmpl` that `point` fails, or nullopt when it matches.
/// Category matching is a case-insensitive substring test on the parent label.
std::optional<std::string> template_rejection(const PointTemplate& tmpl, const InteractionPoint& point,
                                              std::string_view parent_label);

inline bool matches_template(const PointTemplate& tmpl, const InteractionPoint& point,
                             std::string_view parent_label)
{
  return !template_rejection(tmpl, point, parent_label).has_value();
}

/// True when every use of `slot` in the template is a grasp.
bool grasp_only_slot(const SkillEntry& entry, std::string_view slot);

/// Whether hand requirements hold for the given occupancy (true = holding).
bool hands_meet(const HandPrecondition& pre, bool right_holding, bool left_holding, bool mirrored);

}  // namespace biman
