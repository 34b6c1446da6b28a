#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aesadv/corpus.hpp"
#include "json.hpp"

namespace aesadv {

using Json = nlohmann::json;

Json essay_to_json(const Essay& essay);
// Ignores unknown fields, so adversarial records with reports load too.
Essay essay_from_json(const Json& j);

Json read_json_file(const std::filesystem::path& path);
// Writes `j` pretty-printed with a trailing newline.
void write_json_file(const Json& j, const std::filesystem::path& path);
std::vector<Json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::vector<Json>& lines, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace aesadv
