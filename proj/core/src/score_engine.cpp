#include "ledgerlens/score_engine.hpp"

#include <algorithm>
#include <unordered_set>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/prompt_builder.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

const std::unordered_set<std::string> kPositiveWords{"increase", "increasing", "increased", "grew",
                                                     "growth",   "improved",   "up",        "gain"};
const std::unordered_set<std::string> kNegativeWords{"decrease", "decreasing", "declined", "dropped",
                                                     "fell",     "down",       "slowed"};

void set_reason(std::string* reason, std::string text) {
  if (reason) *reason = std::move(text);
}

std::string describe(const std::set<std::string>& s) { return join(std::vector<std::string>(s.begin(), s.end()), ", "); }

std::string blank_entities(std::string_view text, const KeywordDictionary& dict) {
  std::string out(text);
  for (const auto& m : dict.find_entities(text)) {
    for (auto i = m.begin; i < m.end && i < out.size(); ++i) out[i] = ' ';
  }
  return out;
}

struct ContextSentence {
  NumberMultiset numbers;
  NamedEntities expanded;
};

}  // namespace

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::Low: return "Low";
    case Confidence::Medium: return "Medium";
    case Confidence::High: return "High";
  }
  return "Low";
}

Confidence parse_confidence(std::string_view s) {
  if (s == "Low") return Confidence::Low;
  if (s == "Medium") return Confidence::Medium;
  if (s == "High") return Confidence::High;
  throw Error("unknown confidence label: " + std::string(s));
}

Confidence confidence_from_sum(int sum) {
  if (sum >= 5) return Confidence::High;
  if (sum >= 3) return Confidence::Medium;
  return Confidence::Low;
}

Confidence confidence(const std::array<bool, kMetricCount>& flags) {
  return confidence_from_sum(static_cast<int>(std::count(flags.begin(), flags.end(), true)));
}

void to_json(nlohmann::json& j, const ResponseScores& s) {
  j = nlohmann::json::object();
  for (std::size_t i = 0; i < kMetricCount; ++i) j["s" + std::to_string(i + 1)] = s.flags[i] ? 1 : 0;
  j["sum"] = s.sum;
  j["confidence"] = to_string(s.confidence);
  j["diagnostics"] = s.diagnostics;
}

void from_json(const nlohmann::json& j, ResponseScores& s) {
  for (std::size_t i = 0; i < kMetricCount; ++i) s.flags[i] = j.at("s" + std::to_string(i + 1)).get<int>() != 0;
  s.sum = j.at("sum").get<int>();
  s.confidence = parse_confidence(j.at("confidence").get<std::string>());
  s.diagnostics = j.value("diagnostics", std::vector<std::string>{});
}

bool score_s1(const NamedEntities& query, const NamedEntities& response, const KeywordDictionary& dict,
              std::string* reason) {
  std::vector<std::string> missing;
  for (auto kind : {EntityKind::Metric, EntityKind::Geo, EntityKind::Period}) {
    for (const auto& q : query.of(kind)) {
      NamedEntities one;
      one.of(kind).insert(q);
      const auto expanded = expand_hierarchy(one, dict);
      const auto& covered_by = expanded.of(kind);
      const auto& got = response.of(kind);
      const bool hit = std::any_of(covered_by.begin(), covered_by.end(), [&](const auto& e) { return got.count(e); });
      if (!hit) missing.push_back(q);
    }
  }
  if (missing.empty()) return true;
  set_reason(reason, "response does not cover " + join(missing, ", "));
  return false;
}

bool score_s2(std::string_view response, const std::vector<DataChunk>& chunks, std::string* reason) {
  NumberMultiset context;
  for (const auto& c : chunks) context.merge(c.numbers);
  std::vector<std::string> unknown;
  const auto found = extract_numbers(response);
  for (double v : found.values()) {
    if (!context.contains(v)) unknown.push_back(format_fixed2(v));
  }
  if (unknown.empty()) return true;
  unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
  set_reason(reason, "numbers not in context: " + join(unknown, ", "));
  return false;
}

bool score_s3(std::string_view prompt, std::string_view response, std::size_t delta, std::string* reason) {
  if (delta < 2) throw Error("s3 window must be at least 2 words");
  const auto p = normalized_words(prompt);
  const auto r = normalized_words(response);
  if (r.size() < delta || p.size() < delta) return true;

  auto gram = [delta](const std::vector<std::string>& w, std::size_t i) {
    std::string g;
    for (std::size_t k = 0; k < delta; ++k) {
      if (k) g += ' ';
      g += w[i + k];
    }
    return g;
  };
  std::unordered_set<std::string> grams;
  grams.reserve(p.size());
  for (std::size_t i = 0; i + delta <= p.size(); ++i) grams.insert(gram(p, i));
  for (std::size_t i = 0; i + delta <= r.size(); ++i) {
    auto g = gram(r, i);
    if (grams.count(g)) {
      set_reason(reason, "copies \"" + g + "\" from the prompt");
      return false;
    }
  }
  return true;
}

bool score_s4(std::string_view response, std::string* reason) {
  for (const auto& sentence : split_sentences(response)) {
    bool positive_word = false, negative_word = false, says_positive = false;
    for (const auto& w : normalized_words(sentence)) {
      positive_word = positive_word || kPositiveWords.count(w) > 0;
      negative_word = negative_word || kNegativeWords.count(w) > 0;
      says_positive = says_positive || w == "positive";
    }
    if (!positive_word && !negative_word) continue;
    const auto spans = extract_number_spans(sentence);
    for (const auto& s : spans) {
      if (positive_word && s.value < 0) {
        set_reason(reason, "rising wording with a negative number in \"" + std::string(trim(sentence)) + "\"");
        return false;
      }
      const bool explicit_plus = sentence[s.begin] == '+';
      if (negative_word && s.value > 0 && (explicit_plus || says_positive)) {
        set_reason(reason, "falling wording with a positive number in \"" + std::string(trim(sentence)) + "\"");
        return false;
      }
    }
  }
  return true;
}

bool score_s4(std::string_view response, const KeywordDictionary& dict, std::string* reason) {
  return score_s4(blank_entities(response, dict), reason);
}

bool score_s5(const NamedEntities& query, const std::vector<DataChunk>& chunks, std::string* reason) {
  if (query.metrics.empty()) return true;
  for (const auto& c : chunks) {
    std::set<std::string> foreign;
    std::set_difference(c.metrics.begin(), c.metrics.end(), query.metrics.begin(), query.metrics.end(),
                        std::inserter(foreign, foreign.end()));
    if (!foreign.empty()) {
      set_reason(reason, "chunk " + c.id + " also covers " + describe(foreign));
      return false;
    }
  }
  return true;
}

bool score_s6(std::string_view response, const std::vector<DataChunk>& chunks, const KeywordDictionary& dict,
              std::string* reason) {
  std::vector<ContextSentence> context;
  for (const auto& c : chunks) {
    for (const auto& s : split_sentences(c.text)) {
      auto nums = extract_numbers(s);
      if (nums.empty()) continue;
      context.push_back({std::move(nums), expand_hierarchy(extract_entities(s, dict), dict)});
    }
  }
  auto covers = [](const NamedEntities& big, const NamedEntities& small) {
    for (auto kind : {EntityKind::Metric, EntityKind::Geo, EntityKind::Period}) {
      const auto& b = big.of(kind);
      const auto& s = small.of(kind);
      if (!std::includes(b.begin(), b.end(), s.begin(), s.end())) return false;
    }
    return true;
  };
  for (const auto& sentence : split_sentences(response)) {
    const auto nums = extract_numbers(sentence);
    if (nums.empty()) continue;
    const auto ents = extract_entities(sentence, dict);
    for (double v : nums.values()) {
      const bool backed = std::any_of(context.begin(), context.end(), [&](const ContextSentence& cs) {
        return cs.numbers.contains(v) && covers(cs.expanded, ents);
      });
      if (!backed) {
        set_reason(reason, format_fixed2(v) + " in \"" + std::string(trim(sentence)) +
                               "\" is not stated for these entities in the context");
        return false;
      }
    }
  }
  return true;
}

ResponseScores score_response(const PromptBundle& bundle, std::string_view response, const KeywordDictionary& dict,
                              const ScoreOptions& options) {
  ResponseScores out;
  std::array<std::string, kMetricCount> why;
  const auto response_entities = extract_entities(response, dict);
  out.flags[0] = score_s1(bundle.query_entities, response_entities, dict, &why[0]);
  out.flags[1] = score_s2(response, bundle.chunks, &why[1]);
  out.flags[2] = score_s3(bundle.text, response, options.delta, &why[2]);
  out.flags[3] = score_s4(response, dict, &why[3]);
  out.flags[4] = score_s5(bundle.query_entities, bundle.chunks, &why[4]);
  out.flags[5] = score_s6(response, bundle.chunks, dict, &why[5]);
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    if (!out.flags[i]) out.diagnostics.push_back("s" + std::to_string(i + 1) + ": " + why[i]);
  }
  out.sum = static_cast<int>(std::count(out.flags.begin(), out.flags.end(), true));
  out.confidence = confidence_from_sum(out.sum);
  return out;
}

}  // namespace ledgerlens
