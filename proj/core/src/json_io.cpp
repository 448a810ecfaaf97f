#include "json_io.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>

#include "actforge/errors.hpp"

namespace actforge::jsonio {

json context_to_json(const textenv::Context& c) {
  json history = json::array();
  for (const auto& h : c.history) history.push_back({{"observation", h.observation}, {"action", h.action}});
  return json{{"task_description", c.task_description},
              {"history", std::move(history)},
              {"observation", c.current_observation},
              {"admissible_actions", c.admissible_actions},
              {"step_index", c.step_index}};
}

textenv::Context context_from_json(const json& j) {
  if (!j.is_object()) throw DataError("context is not an object");
  textenv::Context c;
  c.task_description = get_field<std::string>(j, "task_description");
  c.current_observation = get_field<std::string>(j, "observation");
  c.admissible_actions = get_field<std::vector<std::string>>(j, "admissible_actions");
  if (j.contains("step_index")) c.step_index = get_field<int>(j, "step_index");
  auto hist = j.find("history");
  if (hist == j.end() || !hist->is_array()) throw DataError("history missing or not an array");
  for (const auto& h : *hist)
    c.history.push_back({get_field<std::string>(h, "observation"), get_field<std::string>(h, "action")});
  return c;
}

std::vector<JsonLine> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<JsonLine> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back({lineno, json::parse(line)});
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, e.what());
    }
  }
  return out;
}

std::string dump_line(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::strict); }

void write_text_file(const std::string& path, const std::string& contents) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path);
  out << contents;
  if (!out) throw DataError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace actforge::jsonio
