#pragma once

#include "herbar/targetdb.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace herbar {

struct Morphology {
  std::string roots, stems, leaves, seeds;
  friend bool operator==(const Morphology&, const Morphology&) = default;
};

struct Ecology {
  std::string environment, life_cycle;
  friend bool operator==(const Ecology&, const Ecology&) = default;
};

// One herb's learning material: the species block (names, source area, usage),
// morphology and ecology.
struct HerbEntry {
  std::string content_id;
  std::string name_cn;
  std::string name_en;
  std::string source_area;
  std::string usage;
  Morphology morphology;
  Ecology ecology;

  friend bool operator==(const HerbEntry&, const HerbEntry&) = default;
};

nlohmann::json to_json(const HerbEntry& e);
HerbEntry entry_from_json(const nlohmann::json& j);

class Catalog {
 public:
  const std::map<std::string, HerbEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  // Throws DuplicateId.
  void add(HerbEntry entry);
  // Throws NotFound.
  const HerbEntry& get(const std::string& content_id) const;
  const HerbEntry* find(const std::string& content_id) const noexcept;

  friend bool operator==(const Catalog&, const Catalog&) = default;

 private:
  std::map<std::string, HerbEntry> entries_;
};

// Parses a JSON array of entries. Throws ParseError (with line and column),
// DuplicateId or MissingSection.
Catalog load_catalog(const std::string& json_text);
Catalog load_catalog_file(const std::filesystem::path& path);
std::string serialize_catalog(const Catalog& catalog);

struct ConsistencyReport {
  std::vector<std::string> missing_entries;  // content ids used by targets, absent from the catalog
  std::vector<std::string> orphan_entries;   // catalog ids no target references

  bool consistent() const noexcept { return missing_entries.empty() && orphan_entries.empty(); }
  nlohmann::json to_json() const;
};

ConsistencyReport validate_against_db(const Catalog& catalog, const TargetDatabase& db);

}  // namespace herbar
