#include "lcarep/manifest.hpp"

#include <fstream>
#include <map>

#include <json.hpp>

#include "lcarep/error.hpp"

namespace lcarep {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void fail_line(const std::string& origin, std::size_t line,
                            const std::string& what) {
  throw DatasetError(origin + ":" + std::to_string(line) + ": " + what);
}

ImageRecord parse_record(const std::string& origin, std::size_t line_no,
                         const std::string& line) {
  ordered_json j;
  try {
    j = ordered_json::parse(line);
  } catch (const ordered_json::parse_error& e) {
    fail_line(origin, line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) fail_line(origin, line_no, "record is not a JSON object");

  ImageRecord r;
  for (const auto& [key, value] : j.items()) {
    if (key == "id") {
      if (!value.is_string()) fail_line(origin, line_no, "id must be a string");
      r.id = value.get<std::string>();
    } else if (key == "path") {
      if (!value.is_string())
        fail_line(origin, line_no, "path must be a string");
      r.path = value.get<std::string>();
    } else if (key == "class_id") {
      if (!value.is_number_integer())
        fail_line(origin, line_no, "class_id must be an integer");
      r.class_id = value.get<std::int64_t>();
    } else if (key == "pair_id") {
      if (!value.is_number_integer())
        fail_line(origin, line_no, "pair_id must be an integer");
      r.pair_id = value.get<std::int64_t>();
    } else {
      // A typo'd key would otherwise silently drop a field.
      fail_line(origin, line_no, "unknown key '" + key + "'");
    }
  }
  if (r.id.empty()) fail_line(origin, line_no, "missing or empty id");
  if (r.path.empty()) fail_line(origin, line_no, "missing or empty path");
  return r;
}

}  // namespace

void validate_manifest(const std::vector<ImageRecord>& records,
                       const std::string& origin) {
  std::map<std::string, std::size_t> id_line;
  std::map<std::int64_t, std::vector<std::size_t>> pair_lines;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const std::size_t line = i + 1;
    auto [it, inserted] = id_line.emplace(records[i].id, line);
    if (!inserted)
      fail_line(origin, line,
                "duplicate id '" + records[i].id + "' (first at line " +
                    std::to_string(it->second) + ")");
    if (records[i].pair_id)
      pair_lines[*records[i].pair_id].push_back(line);
  }
  for (const auto& [pair_id, lines] : pair_lines) {
    if (lines.size() != 2)
      fail_line(origin, lines.front(),
                "pair_id " + std::to_string(pair_id) + " appears " +
                    std::to_string(lines.size()) + " times, expected 2");
  }
}

std::vector<ImageRecord> read_manifest(const std::filesystem::path& path) {
  const std::string origin = path.string();
  std::ifstream f(path);
  if (!f) throw DatasetError("manifest: cannot open: " + origin);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // Trailing blank lines are tolerated; interior ones are not.
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::vector<ImageRecord> records;
  records.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) fail_line(origin, i + 1, "blank line inside manifest");
    records.push_back(parse_record(origin, i + 1, lines[i]));
  }
  validate_manifest(records, origin);
  return records;
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ImageRecord>& records) {
  validate_manifest(records, path.string());
  std::ofstream f(path, std::ios::trunc);
  if (!f)
    throw DatasetError("manifest: cannot open for writing: " + path.string());
  for (const auto& r : records) {
    ordered_json j;
    j["id"] = r.id;
    j["path"] = r.path;
    if (r.class_id) j["class_id"] = *r.class_id;
    if (r.pair_id) j["pair_id"] = *r.pair_id;
    f << j.dump() << "\n";
  }
  f.flush();
  if (!f) throw DatasetError("manifest: write failed: " + path.string());
}

std::filesystem::path resolve_image_path(
    const std::filesystem::path& manifest_path, const ImageRecord& record) {
  return manifest_path.parent_path() / record.path;
}

}  // namespace lcarep
