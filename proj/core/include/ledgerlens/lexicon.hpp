#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace ledgerlens {

enum class EntityKind { Metric, Geo, Period };

std::string_view to_string(EntityKind kind);

// Canonical metric / geo / period sets extracted from a query or a response.
struct NamedEntities {
  std::set<std::string> metrics;
  std::set<std::string> geos;
  std::set<std::string> periods;

  bool empty() const { return metrics.empty() && geos.empty() && periods.empty(); }
  std::set<std::string>& of(EntityKind kind);
  const std::set<std::string>& of(EntityKind kind) const;

  friend bool operator==(const NamedEntities&, const NamedEntities&) = default;
};

void to_json(nlohmann::json& j, const NamedEntities& e);
void from_json(const nlohmann::json& j, NamedEntities& e);

struct MetricEntry {
  std::string name;
  std::vector<std::string> synonyms;
  std::string definition;
};

struct HierarchyNode {
  std::string name;
  std::string parent;  // empty for roots
  std::vector<std::string> synonyms;
  std::string sort_key;
};

struct EntityMatch {
  EntityKind kind;
  std::string canonical;
  std::size_t begin = 0;  // byte span in the scanned text
  std::size_t end = 0;
};

// Immutable after construction; safe for concurrent reads.
class KeywordDictionary {
 public:
  // Validates the documented schema. Throws SchemaError, CycleError or
  // AmbiguousSynonym, naming the JSON path of the offending entry.
  static KeywordDictionary from_json(const nlohmann::json& doc);

  const std::vector<MetricEntry>& metrics() const noexcept { return metrics_; }
  const std::vector<HierarchyNode>& geos() const noexcept { return geos_; }
  const std::vector<HierarchyNode>& periods() const noexcept { return periods_; }

  struct Canonical {
    EntityKind kind;
    std::string name;
  };
  // Case-insensitive lookup of any surface form (name or synonym).
  std::optional<Canonical> lookup(std::string_view surface) const;
  bool contains(EntityKind kind, const std::string& canonical) const;

  // Geo or period hierarchy walks, nearest first / in declaration order.
  std::vector<std::string> ancestors(const std::string& canonical) const;
  std::vector<std::string> descendants(const std::string& canonical) const;

  // Sort key declared for a period, or the label itself.
  std::string period_sort_key(const std::string& period) const;

  // lowercase word -> display form
  const std::map<std::string, std::string>& vocabulary() const noexcept { return vocabulary_; }
  bool in_vocabulary(std::string_view word) const;

  // Position of a canonical entity in declaration order (for stable output).
  std::size_t declaration_index(EntityKind kind, const std::string& canonical) const;

  // Leftmost-longest phrase scan over word tokens.
  std::vector<EntityMatch> find_entities(std::string_view text) const;

  const nlohmann::json& source() const noexcept { return source_; }

 private:
  struct Phrase {
    std::vector<std::string> tokens;
    EntityKind kind;
    std::string canonical;
  };

  std::vector<MetricEntry> metrics_;
  std::vector<HierarchyNode> geos_;
  std::vector<HierarchyNode> periods_;
  std::unordered_map<std::string, Canonical> surface_;
  std::unordered_map<std::string, std::vector<Phrase>> phrases_by_first_token_;
  std::unordered_map<std::string, std::string> parent_;
  std::unordered_map<std::string, std::vector<std::string>> children_;
  std::unordered_map<std::string, std::string> sort_keys_;
  std::unordered_map<std::string, std::size_t> order_[3];
  std::map<std::string, std::string> vocabulary_;
  nlohmann::json source_;
};

KeywordDictionary load_lexicon(const std::filesystem::path& path);

NamedEntities extract_entities(std::string_view text, const KeywordDictionary& dict);

// Adds every descendant of each geo and period. Metrics are flat.
NamedEntities expand_hierarchy(const NamedEntities& entities, const KeywordDictionary& dict);

// Definitions of the metrics in entities, in dictionary order.
std::vector<std::string> filter_definitions(const KeywordDictionary& dict, const NamedEntities& entities);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Replaces each out-of-vocabulary word with the closest vocabulary word.
// Tokens containing digits are left alone; words of three characters or
// fewer accept at most one edit.
std::string spell_correct(std::string_view query, const KeywordDictionary& dict, std::size_t max_dist = 2);

}  // namespace ledgerlens
