#include "aesadv/json_io.hpp"

#include <fstream>
#include <sstream>

#include "aesadv/error.hpp"

namespace aesadv {

Json essay_to_json(const Essay& essay) {
  Json j;
  j["id"] = essay.id;
  j["prompt_id"] = essay.prompt_id;
  j["text"] = essay.text;
  j["rater_scores"] = essay.rater_scores;
  j["gold_score"] = essay.gold_score;
  j["provenance"] = essay.is_adversarial() ? "adversarial" : "original";
  if (essay.is_adversarial()) j["source_id"] = essay.source_id;
  return j;
}

Essay essay_from_json(const Json& j) {
  try {
    Essay e;
    e.id = j.at("id").get<std::string>();
    e.prompt_id = j.at("prompt_id").get<int>();
    e.text = j.at("text").get<std::string>();
    if (j.contains("rater_scores")) e.rater_scores = j.at("rater_scores").get<std::vector<int>>();
    e.gold_score = j.at("gold_score").get<int>();
    const auto provenance = j.value("provenance", std::string("original"));
    if (provenance == "adversarial") {
      e.provenance = Provenance::kAdversarial;
      e.source_id = j.at("source_id").get<std::string>();
    } else if (provenance != "original") {
      throw DataError("unknown provenance '" + provenance + "'");
    }
    return e;
  } catch (const Json::exception& ex) {
    throw DataError(std::string("malformed essay record: ") + ex.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << contents;
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::parse_error& ex) {
    throw DataError(path.string() + ": " + ex.what());
  }
}

void write_json_file(const Json& j, const std::filesystem::path& path) { write_file(path, j.dump(2) + "\n"); }

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
  std::vector<Json> out;
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& ex) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + ex.what());
    }
  }
  return out;
}

void write_json_lines(const std::vector<Json>& lines, const std::filesystem::path& path) {
  std::string buf;
  for (const auto& j : lines) {
    buf += j.dump();
    buf += '\n';
  }
  write_file(path, buf);
}

}  // namespace aesadv
