#pragma once

// Field accessors that raise biman::Error with a field path on schema problems.

#include "biman/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace biman
{

using json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& file);
json parse_json(std::string_view text);

const json& get_field(const json& j, const std::string& key, const std::string& path);
const json& get_array(const json& j, const std::string& key, const std::string& path);
std::string get_string(const json& j, const std::string& key, const std::string& path);
int get_int(const json& j, const std::string& key, const std::string& path);
double get_double(const json& j, const std::string& key, const std::string& path);
bool get_bool(const json& j, const std::string& key, const std::string& path);
Vec3 get_vec3(const json& j, const std::string& key, const std::string& path);
TagSet get_tags(const json& j, const std::string& key, const std::string& path, bool required);

json to_json(const Vec3& v);
json to_json(const TagSet& tags);

}  // namespace biman
