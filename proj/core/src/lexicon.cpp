#include "ledgerlens/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Metric: return "metric";
    case EntityKind::Geo: return "geo";
    case EntityKind::Period: return "period";
  }
  return "metric";
}

std::set<std::string>& NamedEntities::of(EntityKind kind) {
  switch (kind) {
    case EntityKind::Metric: return metrics;
    case EntityKind::Geo: return geos;
    case EntityKind::Period: return periods;
  }
  return metrics;
}

const std::set<std::string>& NamedEntities::of(EntityKind kind) const {
  return const_cast<NamedEntities*>(this)->of(kind);
}

void to_json(nlohmann::json& j, const NamedEntities& e) {
  j = nlohmann::json{{"metrics", e.metrics}, {"geos", e.geos}, {"periods", e.periods}};
}

void from_json(const nlohmann::json& j, NamedEntities& e) {
  e.metrics = j.value("metrics", std::set<std::string>{});
  e.geos = j.value("geos", std::set<std::string>{});
  e.periods = j.value("periods", std::set<std::string>{});
}

namespace {

struct WordToken {
  std::string lower;
  std::size_t begin, end;
};

std::vector<WordToken> word_tokens(std::string_view text) {
  std::vector<WordToken> out;
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_word_char(text[i])) {
      ++i;
      continue;
    }
    const std::size_t b = i;
    while (i < text.size() && is_word_char(text[i])) ++i;
    out.push_back({to_lower(text.substr(b, i - b)), b, i});
  }
  return out;
}

std::string require_string(const nlohmann::json& j, const std::string& path) {
  if (!j.is_string() || j.get<std::string>().empty()) {
    throw SchemaError(path + ": expected a non-empty string");
  }
  return j.get<std::string>();
}

std::vector<std::string> string_list(const nlohmann::json& obj, const char* key, const std::string& path) {
  std::vector<std::string> out;
  if (!obj.contains(key)) return out;
  const auto& arr = obj.at(key);
  if (!arr.is_array()) throw SchemaError(path + "." + key + ": expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(require_string(arr[i], path + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::size_t kind_index(EntityKind k) { return static_cast<std::size_t>(k); }

}  // namespace

KeywordDictionary KeywordDictionary::from_json(const nlohmann::json& doc) {
  KeywordDictionary d;
  d.source_ = doc;
  if (!doc.is_object()) throw SchemaError("$: expected an object");
  for (const char* key : {"metrics", "geo_tree", "period_tree"}) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
      throw SchemaError(std::string("$.") + key + ": expected an array");
    }
  }

  // surface form -> (kind, canonical, path)
  std::map<std::string, std::pair<Canonical, std::string>> surfaces;
  auto add_surface = [&](const std::string& form, EntityKind kind, const std::string& canonical,
                         const std::string& path) {
    const std::string key = to_lower(form);
    auto [it, inserted] = surfaces.try_emplace(key, Canonical{kind, canonical}, path);
    if (!inserted && (it->second.first.kind != kind || it->second.first.name != canonical)) {
      throw AmbiguousSynonym(path + ": '" + form + "' already maps to '" + it->second.first.name +
                             "' at " + it->second.second);
    }
  };

  const auto& metrics = doc.at("metrics");
  for (std::size_t i = 0; i < metrics.size(); ++i) {
    const std::string path = "$.metrics[" + std::to_string(i) + "]";
    const auto& m = metrics[i];
    if (!m.is_object()) throw SchemaError(path + ": expected an object");
    MetricEntry e;
    e.name = require_string(m.value("name", nlohmann::json()), path + ".name");
    e.synonyms = string_list(m, "synonyms", path);
    if (m.contains("definition")) {
      if (!m.at("definition").is_string()) throw SchemaError(path + ".definition: expected a string");
      e.definition = m.at("definition").get<std::string>();
    }
    if (d.order_[kind_index(EntityKind::Metric)].count(e.name)) {
      throw SchemaError(path + ".name: duplicate metric '" + e.name + "'");
    }
    d.order_[kind_index(EntityKind::Metric)][e.name] = d.metrics_.size();
    add_surface(e.name, EntityKind::Metric, e.name, path + ".name");
    for (std::size_t s = 0; s < e.synonyms.size(); ++s) {
      add_surface(e.synonyms[s], EntityKind::Metric, e.name, path + ".synonyms[" + std::to_string(s) + "]");
    }
    d.metrics_.push_back(std::move(e));
  }

  auto load_tree = [&](const char* key, EntityKind kind, std::vector<HierarchyNode>& nodes) {
    const auto& arr = doc.at(key);
    auto& order = d.order_[kind_index(kind)];
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = std::string("$.") + key + "[" + std::to_string(i) + "]";
      const auto& n = arr[i];
      if (!n.is_object()) throw SchemaError(path + ": expected an object");
      HierarchyNode node;
      node.name = require_string(n.value("name", nlohmann::json()), path + ".name");
      if (n.contains("parent") && !n.at("parent").is_null()) {
        node.parent = require_string(n.at("parent"), path + ".parent");
      }
      node.synonyms = string_list(n, "synonyms", path);
      if (n.contains("sort_key")) node.sort_key = require_string(n.at("sort_key"), path + ".sort_key");
      for (int other = 0; other < 3; ++other) {
        if (d.order_[other].count(node.name)) {
          throw SchemaError(path + ".name: duplicate entity '" + node.name + "'");
        }
      }
      order[node.name] = nodes.size();
      add_surface(node.name, kind, node.name, path + ".name");
      for (std::size_t s = 0; s < node.synonyms.size(); ++s) {
        add_surface(node.synonyms[s], kind, node.name, path + ".synonyms[" + std::to_string(s) + "]");
      }
      nodes.push_back(std::move(node));
    }
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& node = nodes[i];
      if (node.parent.empty()) continue;
      if (!order.count(node.parent)) {
        throw SchemaError(std::string("$.") + key + "[" + std::to_string(i) + "].parent: unknown " +
                          std::string(to_string(kind)) + " '" + node.parent + "'");
      }
      d.parent_[node.name] = node.parent;
      d.children_[node.parent].push_back(node.name);
      if (!node.sort_key.empty()) d.sort_keys_[node.name] = node.sort_key;
    }
    for (const auto& node : nodes) {
      if (node.parent.empty() && !node.sort_key.empty()) d.sort_keys_[node.name] = node.sort_key;
    }
    // every node must reach a root
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::set<std::string> seen{nodes[i].name};
      std::string cur = nodes[i].name;
      while (d.parent_.count(cur)) {
        cur = d.parent_.at(cur);
        if (!seen.insert(cur).second) {
          throw CycleError(std::string("$.") + key + "[" + std::to_string(i) + "]: '" + nodes[i].name +
                           "' is part of a parent cycle");
        }
      }
    }
  };
  load_tree("geo_tree", EntityKind::Geo, d.geos_);
  load_tree("period_tree", EntityKind::Period, d.periods_);

  for (const auto& [form, entry] : surfaces) {
    d.surface_.emplace(form, entry.first);
  }

  // Phrase index and vocabulary, both keyed on the original casing of the form.
  auto index_form = [&](const std::string& form, EntityKind kind, const std::string& canonical) {
    auto toks = word_tokens(form);
    if (toks.empty()) return;
    Phrase p;
    for (auto& t : toks) {
      p.tokens.push_back(t.lower);
      d.vocabulary_.try_emplace(t.lower, form.substr(t.begin, t.end - t.begin));
    }
    p.kind = kind;
    p.canonical = canonical;
    d.phrases_by_first_token_[p.tokens.front()].push_back(std::move(p));
  };
  for (const auto& m : d.metrics_) {
    index_form(m.name, EntityKind::Metric, m.name);
    for (const auto& s : m.synonyms) index_form(s, EntityKind::Metric, m.name);
  }
  for (const auto& n : d.geos_) {
    index_form(n.name, EntityKind::Geo, n.name);
    for (const auto& s : n.synonyms) index_form(s, EntityKind::Geo, n.name);
  }
  for (const auto& n : d.periods_) {
    index_form(n.name, EntityKind::Period, n.name);
    for (const auto& s : n.synonyms) index_form(s, EntityKind::Period, n.name);
  }
  for (auto& [first, list] : d.phrases_by_first_token_) {
    std::stable_sort(list.begin(), list.end(),
                     [](const Phrase& a, const Phrase& b) { return a.tokens.size() > b.tokens.size(); });
  }
  for (const auto& w : string_list(doc, "vocabulary", "$")) {
    for (auto& t : word_tokens(w)) d.vocabulary_.try_emplace(t.lower, w.substr(t.begin, t.end - t.begin));
  }
  return d;
}

std::optional<KeywordDictionary::Canonical> KeywordDictionary::lookup(std::string_view surface) const {
  auto it = surface_.find(to_lower(surface));
  if (it == surface_.end()) return std::nullopt;
  return it->second;
}

bool KeywordDictionary::contains(EntityKind kind, const std::string& canonical) const {
  return order_[kind_index(kind)].count(canonical) > 0;
}

std::vector<std::string> KeywordDictionary::ancestors(const std::string& canonical) const {
  std::vector<std::string> out;
  std::string cur = canonical;
  while (true) {
    auto it = parent_.find(cur);
    if (it == parent_.end()) break;
    out.push_back(it->second);
    cur = it->second;
  }
  return out;
}

std::vector<std::string> KeywordDictionary::descendants(const std::string& canonical) const {
  std::vector<std::string> out;
  std::function<void(const std::string&)> walk = [&](const std::string& name) {
    auto it = children_.find(name);
    if (it == children_.end()) return;
    for (const auto& child : it->second) {
      out.push_back(child);
      walk(child);
    }
  };
  walk(canonical);
  return out;
}

std::string KeywordDictionary::period_sort_key(const std::string& period) const {
  auto it = sort_keys_.find(period);
  return it == sort_keys_.end() ? period : it->second;
}

bool KeywordDictionary::in_vocabulary(std::string_view word) const {
  return vocabulary_.count(to_lower(word)) > 0;
}

std::size_t KeywordDictionary::declaration_index(EntityKind kind, const std::string& canonical) const {
  const auto& order = order_[kind_index(kind)];
  auto it = order.find(canonical);
  return it == order.end() ? order.size() : it->second;
}

std::vector<EntityMatch> KeywordDictionary::find_entities(std::string_view text) const {
  std::vector<EntityMatch> out;
  const auto toks = word_tokens(text);
  std::size_t i = 0;
  while (i < toks.size()) {
    auto it = phrases_by_first_token_.find(toks[i].lower);
    bool matched = false;
    if (it != phrases_by_first_token_.end()) {
      for (const auto& phrase : it->second) {
        const std::size_t len = phrase.tokens.size();
        if (i + len > toks.size()) continue;
        bool ok = true;
        for (std::size_t k = 1; k < len && ok; ++k) ok = toks[i + k].lower == phrase.tokens[k];
        if (!ok) continue;
        out.push_back({phrase.kind, phrase.canonical, toks[i].begin, toks[i + len - 1].end});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  return out;
}

KeywordDictionary load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError("$: " + std::string(e.what()));
  }
  return KeywordDictionary::from_json(doc);
}

NamedEntities extract_entities(std::string_view text, const KeywordDictionary& dict) {
  NamedEntities out;
  for (const auto& m : dict.find_entities(text)) out.of(m.kind).insert(m.canonical);
  return out;
}

NamedEntities expand_hierarchy(const NamedEntities& entities, const KeywordDictionary& dict) {
  NamedEntities out = entities;
  for (const auto& g : entities.geos) {
    for (auto& d : dict.descendants(g)) out.geos.insert(std::move(d));
  }
  for (const auto& p : entities.periods) {
    for (auto& d : dict.descendants(p)) out.periods.insert(std::move(d));
  }
  return out;
}

std::vector<std::string> filter_definitions(const KeywordDictionary& dict, const NamedEntities& entities) {
  std::vector<std::string> out;
  for (const auto& m : dict.metrics()) {
    if (entities.metrics.count(m.name) && !m.definition.empty()) out.push_back(m.definition);
  }
  return out;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::string spell_correct(std::string_view query, const KeywordDictionary& dict, std::size_t max_dist) {
  std::string out;
  std::size_t i = 0;
  const auto& vocab = dict.vocabulary();
  while (i < query.size()) {
    if (std::isspace(static_cast<unsigned char>(query[i]))) {
      out.push_back(query[i++]);
      continue;
    }
    const std::size_t b = i;
    while (i < query.size() && !std::isspace(static_cast<unsigned char>(query[i]))) ++i;
    std::string_view token = query.substr(b, i - b);

    std::size_t lead = 0;
    while (lead < token.size() && !is_word_char(token[lead])) ++lead;
    std::size_t tail = token.size();
    while (tail > lead && !is_word_char(token[tail - 1])) --tail;
    std::string_view core = token.substr(lead, tail - lead);

    const bool has_digit = std::any_of(core.begin(), core.end(),
                                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (core.empty() || has_digit || dict.in_vocabulary(core)) {
      out.append(token);
      continue;
    }
    const std::string lower = to_lower(core);
    const std::size_t limit = core.size() <= 3 ? std::min<std::size_t>(max_dist, 1) : max_dist;
    const std::string* best = nullptr;
    std::size_t best_dist = limit + 1;
    for (const auto& [word, display] : vocab) {
      const std::size_t len_gap = word.size() > lower.size() ? word.size() - lower.size() : lower.size() - word.size();
      if (len_gap > limit) continue;
      const std::size_t d = levenshtein(lower, word);
      // vocabulary is ordered, so strict < keeps the lexicographically first on ties
      if (d < best_dist) {
        best_dist = d;
        best = &display;
      }
    }
    out.append(token.substr(0, lead));
    out.append(best ? std::string_view(*best) : core);
    out.append(token.substr(tail));
  }
  return out;
}

}  // namespace ledgerlens
