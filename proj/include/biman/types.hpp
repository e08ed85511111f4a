#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace biman
{

using TagSet = std::set<std::string>;

struct Vec3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend bool operator==(const Vec3&, const Vec3&) = default;

  double norm() const { return std::sqrt(x * x + y * y + z * z); }
  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline double distance(const Vec3& a, const Vec3& b) { return (a - b).norm(); }

/// Agent stance. Position is in the world frame (z-up), yaw is the heading
/// about +z measured from +x.
struct Pose
{
  Vec3 position;
  double yaw = 0.0;
};

enum class Hand
{
  Right,
  Left
};

inline Hand other(Hand h) { return h == Hand::Right ? Hand::Left : Hand::Right; }
inline constexpr std::array<Hand, 2> kHands = {Hand::Right, Hand::Left};

enum class Zone
{
  Left,
  Mid,
  Right
};

enum class HandPrimitive
{
  Grasp,
  Put,
  Press,
  Push,
  Pull,
  Pour,
  Release,
  Idle
};

enum class Coordination
{
  TwoHandsOneObject,
  TwoHandsTwoObjects,
  Unimanual
};

/// Thrown for malformed documents, dangling references and other input or
/// planning failures. `path` names the offending field when there is one.
class Error : public std::runtime_error
{
public:
  enum class Kind
  {
    Parse,
    Schema,
    DuplicateId,
    DanglingReference,
    UnresolvedLabel,
    Continuity,
    Refinement,
    Generation,
    Navigation,
    Evaluation,
    Io
  };

  Error(Kind kind, std::string message, std::string path = {})
    : std::runtime_error(std::move(message)), kind_(kind), path_(std::move(path))
  {
  }

  Kind kind() const { return kind_; }
  const std::string& path() const { return path_; }

private:
  Kind kind_;
  std::string path_;
};

std::string_view to_string(Hand h);
std::string_view to_string(Zone z);
std::string_view to_string(HandPrimitive p);
std::string_view to_string(Coordination c);
std::string_view to_string(Error::Kind k);

std::optional<HandPrimitive> parse_primitive(std::string_view s);
std::optional<Coordination> parse_coordination(std::string_view s);
std::optional<Hand> parse_hand(std::string_view s);

/// Affordance tags a descriptor may carry.
const TagSet& known_affordances();

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view s);

template<typename Set>
bool is_subset(const Set& sub, const Set& super)
{
  for (const auto& v : sub)
  {
    if (!super.count(v))
    {
      return false;
    }
  }
  return true;
}

}  // namespace biman
