#include "biman/json_util.hpp"

#include <fstream>
#include <sstream>

namespace biman
{

namespace
{
std::string join_path(const std::string& path, const std::string& key)
{
  return path.empty() ? key : path + "." + key;
}
}  // namespace

std::string read_file(const std::filesystem::path& file)
{
  std::ifstream in(file, std::ios::binary);
  if (!in)
  {
    throw Error(Error::Kind::Io, "cannot open file: " + file.string(), file.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(std::string_view text)
{
  try
  {
    return json::parse(text.begin(), text.end());
  }
  catch (const json::parse_error& e)
  {
    throw Error(Error::Kind::Parse, std::string("malformed JSON: ") + e.what());
  }
}

const json& get_field(const json& j, const std::string& key, const std::string& path)
{
  if (!j.is_object() || !j.contains(key))
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": missing field", p);
  }
  return j.at(key);
}

const json& get_array(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  if (!v.is_array())
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": expected array", p);
  }
  return v;
}

std::string get_string(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  if (!v.is_string())
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": expected string", p);
  }
  return v.get<std::string>();
}

int get_int(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  if (!v.is_number_integer())
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": expected integer", p);
  }
  return v.get<int>();
}

double get_double(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  if (!v.is_number())
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": expected number", p);
  }
  return v.get<double>();
}

bool get_bool(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  if (!v.is_boolean())
  {
    const auto p = join_path(path, key);
    throw Error(Error::Kind::Schema, p + ": expected boolean", p);
  }
  return v.get<bool>();
}

Vec3 get_vec3(const json& j, const std::string& key, const std::string& path)
{
  const json& v = get_field(j, key, path);
  const auto p = join_path(path, key);
  if (!v.is_array() || v.size() != 3 || !v[0].is_number() || !v[1].is_number() || !v[2].is_number())
  {
    throw Error(Error::Kind::Schema, p + ": expected [x,y,z]", p);
  }
  Vec3 out{v[0].get<double>(), v[1].get<double>(), v[2].get<double>()};
  if (!out.finite())
  {
    throw Error(Error::Kind::Schema, p + ": components must be finite", p);
  }
  return out;
}

TagSet get_tags(const json& j, const std::string& key, const std::string& path, bool required)
{
  if (!required && (!j.is_object() || !j.contains(key)))
  {
    return {};
  }
  const json& v = get_array(j, key, path);
  TagSet out;
  for (const auto& t : v)
  {
    if (!t.is_string())
    {
      const auto p = join_path(path, key);
      throw Error(Error::Kind::Schema, p + ": expected strings", p);
    }
    out.insert(t.get<std::string>());
  }
  return out;
}

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

json to_json(const TagSet& tags)
{
  json arr = json::array();
  for (const auto& t : tags)
  {
    arr.push_back(t);
  }
  return arr;
}

}  // namespace biman
