#include "herbar/content.hpp"

#include "herbar/error.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace herbar {

namespace {

using nlohmann::json;

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw Error(ErrorCode::MissingSection, where + ": missing '" + key + "'");
  return *it;
}

std::string text_field(const json& section, const char* key, const std::string& where) {
  const json& v = require(section, key, where);
  if (!v.is_string()) throw Error(ErrorCode::ParseError, where + ": '" + key + "' must be a string");
  return v.get<std::string>();
}

// Subfields of morphology and ecology may be absent or empty.
std::string optional_text(const json& section, const char* key, const std::string& where) {
  auto it = section.find(key);
  if (it == section.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorCode::ParseError, where + ": '" + key + "' must be a string");
  return it->get<std::string>();
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

nlohmann::json to_json(const HerbEntry& e) {
  return json{{"content_id", e.content_id},
              {"name_cn", e.name_cn},
              {"name_en", e.name_en},
              {"source_area", e.source_area},
              {"usage", e.usage},
              {"morphology",
               {{"roots", e.morphology.roots},
                {"stems", e.morphology.stems},
                {"leaves", e.morphology.leaves},
                {"seeds", e.morphology.seeds}}},
              {"ecology", {{"environment", e.ecology.environment}, {"life_cycle", e.ecology.life_cycle}}}};
}

HerbEntry entry_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "catalog entry must be an object");
  HerbEntry e;
  e.content_id = text_field(j, "content_id", "entry");
  if (e.content_id.empty()) throw Error(ErrorCode::ParseError, "entry: content_id must be non-empty");
  const std::string where = "entry '" + e.content_id + "'";
  e.name_cn = text_field(j, "name_cn", where);
  e.name_en = text_field(j, "name_en", where);
  e.source_area = text_field(j, "source_area", where);
  e.usage = text_field(j, "usage", where);

  const json& m = require(j, "morphology", where);
  if (!m.is_object()) throw Error(ErrorCode::MissingSection, where + ": morphology must be an object");
  e.morphology = {optional_text(m, "roots", where), optional_text(m, "stems", where),
                  optional_text(m, "leaves", where), optional_text(m, "seeds", where)};

  const json& ec = require(j, "ecology", where);
  if (!ec.is_object()) throw Error(ErrorCode::MissingSection, where + ": ecology must be an object");
  e.ecology = {optional_text(ec, "environment", where), optional_text(ec, "life_cycle", where)};
  return e;
}

void Catalog::add(HerbEntry entry) {
  const std::string id = entry.content_id;
  if (!entries_.emplace(id, std::move(entry)).second) {
    throw Error(ErrorCode::DuplicateId, "duplicate content_id: " + id);
  }
}

const HerbEntry& Catalog::get(const std::string& content_id) const {
  const HerbEntry* e = find(content_id);
  if (!e) throw Error(ErrorCode::NotFound, "no catalog entry for '" + content_id + "'");
  return *e;
}

const HerbEntry* Catalog::find(const std::string& content_id) const noexcept {
  auto it = entries_.find(content_id);
  return it == entries_.end() ? nullptr : &it->second;
}

Catalog load_catalog(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(json_text, e.byte == 0 ? 0 : e.byte - 1);
    throw Error(ErrorCode::ParseError, "catalog parse error at line " + std::to_string(line) + ", column " +
                                           std::to_string(col) + ": " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::ParseError, "catalog must be a JSON array");
  Catalog catalog;
  for (const json& j : doc) catalog.add(entry_from_json(j));
  return catalog;
}

Catalog load_catalog_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return load_catalog(ss.str());
}

std::string serialize_catalog(const Catalog& catalog) {
  json arr = json::array();
  for (const auto& [id, e] : catalog.entries()) arr.push_back(to_json(e));
  return arr.dump(2);
}

nlohmann::json ConsistencyReport::to_json() const {
  return json{{"consistent", consistent()}, {"missing_entries", missing_entries}, {"orphan_entries", orphan_entries}};
}

ConsistencyReport validate_against_db(const Catalog& catalog, const TargetDatabase& db) {
  ConsistencyReport report;
  std::set<std::string> referenced;
  for (const Target& t : db.targets()) {
    if (t.content_id.empty()) continue;  // target without bound content
    referenced.insert(t.content_id);
    if (!catalog.find(t.content_id) &&
        std::find(report.missing_entries.begin(), report.missing_entries.end(), t.content_id) ==
            report.missing_entries.end()) {
      report.missing_entries.push_back(t.content_id);
    }
  }
  for (const auto& [id, e] : catalog.entries()) {
    if (!referenced.count(id)) report.orphan_entries.push_back(id);
  }
  return report;
}

}  // namespace herbar
