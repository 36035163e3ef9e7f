#include "ledgerlens/intent.hpp"

#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/llm_gateway.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

constexpr std::array<std::string_view, kIntentCount> kNames{
    "BasicInfo", "Ranking", "Direction", "Summary", "ProblemSolving", "Diagnostics", "Performance", "Outliers", "Impact"};

constexpr std::array<std::string_view, kIntentCount> kDescriptions{
    "Basic information or definitions",
    "Ranking (highest or lowest)",
    "Direction (increasing or decreasing)",
    "General insights and summaries",
    "Problem solving",
    "Diagnostics",
    "Performance",
    "Outliers",
    "Impact"};

// Lowercased alphanumeric words; everything else separates.
std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RuleClassifier::Rule rule(Intent intent, std::initializer_list<const char*> cues) {
  RuleClassifier::Rule r{intent, {}};
  for (const char* c : cues) r.cues.push_back(words_of(c));
  return r;
}

Intent parse_label(const nlohmann::json& j) {
  if (j.is_number_integer()) {
    if (auto i = intent_from_code(j.get<int>())) return *i;
    throw SchemaError("label out of range: " + j.dump());
  }
  if (j.is_string()) {
    if (auto i = intent_from_name(j.get<std::string>())) return *i;
  }
  throw SchemaError("unknown label: " + j.dump());
}

}  // namespace

std::string_view to_string(Intent intent) { return kNames.at(static_cast<std::size_t>(code(intent))); }

std::optional<Intent> intent_from_code(int c) {
  if (c < 0 || c >= static_cast<int>(kIntentCount)) return std::nullopt;
  return static_cast<Intent>(c);
}

std::optional<Intent> intent_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kIntentCount; ++i)
    if (kNames[i] == name) return static_cast<Intent>(i);
  return std::nullopt;
}

std::string_view intent_description(Intent intent) {
  return kDescriptions.at(static_cast<std::size_t>(code(intent)));
}

const std::array<std::string, kIntentCount>& intent_examples() {
  static const std::array<std::string, kIntentCount> examples{
      "What is the growth in USA in FY 23?",
      "Which regions in USA have the highest revenue?",
      "Is the revenue in Canada increasing?",
      "Summarize the key economic insights in USA?",
      "How can the agricultural revenue be improved in USA?",
      "What are the top drivers for revenue deficits in the Midwest in FY23?",
      "How is the revenue trend in the south for industrial products in FY23?",
      "What are the outliers/exceptions for financial stocks in NYSE in FY23?",
      "How does the revenue deficits for northeast impact the Midwest trends?"};
  return examples;
}

RuleClassifier::RuleClassifier()
    : RuleClassifier(std::vector<Rule>{
          rule(Intent::Outliers, {"outlier", "outliers", "exception", "exceptions", "anomaly", "anomalies", "unusual"}),
          rule(Intent::Impact, {"impact", "impacts", "affect", "affects", "effect", "effects", "influence", "what if"}),
          rule(Intent::Diagnostics, {"why", "driver", "drivers", "cause", "causes", "reason", "reasons", "deficit",
                                     "deficits"}),
          rule(Intent::ProblemSolving, {"how can", "how could", "how should", "improve", "improved", "fix", "solve",
                                        "boost", "recommend"}),
          rule(Intent::Direction, {"increasing", "decreasing", "increase", "decrease", "rising", "falling",
                                   "going up", "going down"}),
          rule(Intent::Ranking, {"highest", "lowest", "top", "bottom", "rank", "ranking", "best", "worst", "most",
                                 "least", "largest", "smallest", "compare", "versus", "vs"}),
          rule(Intent::Performance, {"trend", "trends", "performance", "performing", "how is", "how are", "how did"}),
          rule(Intent::Summary, {"summarize", "summarise", "summary", "overview", "insights", "highlights"}),
      }) {}

RuleClassifier::RuleClassifier(std::vector<Rule> rules) : rules_(std::move(rules)) {}

RuleClassifier RuleClassifier::from_json(const nlohmann::json& doc) {
  std::vector<Rule> rules;
  if (!doc.is_object() || !doc.contains("rules") || !doc.at("rules").is_array())
    throw SchemaError("$.rules: expected an array");
  const auto& arr = doc.at("rules");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string path = "$.rules[" + std::to_string(i) + "]";
    const auto& r = arr[i];
    if (!r.contains("intent") || !r.at("intent").is_string()) throw SchemaError(path + ".intent: expected a name");
    auto intent = intent_from_name(r.at("intent").get<std::string>());
    if (!intent) throw SchemaError(path + ".intent: unknown category " + r.at("intent").dump());
    if (!r.contains("cues") || !r.at("cues").is_array()) throw SchemaError(path + ".cues: expected an array");
    Rule out{*intent, {}};
    for (const auto& c : r.at("cues")) {
      if (!c.is_string()) throw SchemaError(path + ".cues: expected strings");
      auto w = words_of(c.get<std::string>());
      if (w.empty()) throw SchemaError(path + ".cues: empty cue");
      out.cues.push_back(std::move(w));
    }
    rules.push_back(std::move(out));
  }
  return RuleClassifier(std::move(rules));
}

RuleClassifier RuleClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open rule table " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

IntentResult RuleClassifier::classify(std::string_view question) const {
  const auto words = words_of(question);
  for (const auto& r : rules_) {
    for (const auto& cue : r.cues) {
      if (cue.size() > words.size()) continue;
      for (std::size_t i = 0; i + cue.size() <= words.size(); ++i) {
        if (std::equal(cue.begin(), cue.end(), words.begin() + static_cast<std::ptrdiff_t>(i)))
          return {r.intent, false};
      }
    }
  }
  return {Intent::BasicInfo, false};
}

std::string classification_prompt(std::string_view question) {
  std::string out =
      "Read the user question and classify it into exactly one of the intent categories below. "
      "Reply with the category number only.\n";
  for (auto i : kAllIntents) {
    out += std::to_string(code(i));
    out += " - ";
    out += intent_description(i);
    out += ". Example: ";
    out += intent_examples()[static_cast<std::size_t>(code(i))];
    out += '\n';
  }
  out += "Question: ";
  out += question;
  out += "\nCategory:";
  return out;
}

std::optional<long long> first_integer(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
  if (i == text.size()) return std::nullopt;
  long long v = 0;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i) {
    v = v * 10 + (text[i] - '0');
    if (v > 1'000'000'000) return v;
  }
  return v;
}

LlmClassifier::LlmClassifier(const LlmProvider& provider, RuleClassifier fallback)
    : provider_(provider), fallback_(std::move(fallback)) {}

IntentResult LlmClassifier::classify(std::string_view question) const {
  CompletionRequest req;
  req.prompt = classification_prompt(question);
  try {
    const auto reply = complete(req, provider_).text;
    if (auto n = first_integer(reply); n && *n >= 0 && *n < static_cast<long long>(kIntentCount))
      return {static_cast<Intent>(*n), false};
    spdlog::debug("intent reply without a category number: {}", reply);
  } catch (const Error& e) {
    spdlog::warn("intent classification via {} failed: {}", provider_.config().name, e.what());
  }
  auto r = fallback_.classify(question);
  r.fallback = true;
  return r;
}

std::vector<LabeledQuery> parse_labeled_queries(std::istream& in) {
  std::vector<LabeledQuery> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("question").get<std::string>(), parse_label(j.at("label"))});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("line " + std::to_string(n) + ": " + e.what());
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<LabeledQuery> load_labeled_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open labeled queries " + path.string());
  return parse_labeled_queries(in);
}

ClassifierReport evaluate_predictions(const std::vector<Intent>& truth, const std::vector<Intent>& predicted) {
  if (truth.empty()) throw EmptyDataset();
  if (truth.size() != predicted.size()) throw Error("truth and prediction counts differ");
  ClassifierReport r;
  r.total = truth.size();
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ++r.confusion[static_cast<std::size_t>(code(truth[i]))][static_cast<std::size_t>(code(predicted[i]))];
  }
  std::size_t classes = 0;
  for (std::size_t c = 0; c < kIntentCount; ++c) {
    std::size_t predicted_c = 0;
    for (std::size_t t = 0; t < kIntentCount; ++t) {
      r.support[c] += r.confusion[c][t];
      predicted_c += r.confusion[t][c];
    }
    const auto tp = static_cast<double>(r.confusion[c][c]);
    r.precision[c] = predicted_c ? tp / static_cast<double>(predicted_c) : 0.0;
    r.recall[c] = r.support[c] ? tp / static_cast<double>(r.support[c]) : 0.0;
    if (r.support[c]) {
      r.macro_precision += r.precision[c];
      r.macro_recall += r.recall[c];
      ++classes;
    }
  }
  r.macro_precision /= static_cast<double>(classes);
  r.macro_recall /= static_cast<double>(classes);
  return r;
}

ClassifierReport evaluate_classifier(const IntentClassifier& classifier, const std::vector<LabeledQuery>& data) {
  if (data.empty()) throw EmptyDataset();
  std::vector<Intent> truth, predicted;
  std::size_t fallbacks = 0;
  for (const auto& q : data) {
    auto r = classifier.classify(q.question);
    truth.push_back(q.label);
    predicted.push_back(r.intent);
    fallbacks += r.fallback ? 1 : 0;
  }
  auto report = evaluate_predictions(truth, predicted);
  report.fallbacks = fallbacks;
  return report;
}

nlohmann::json to_json(const ClassifierReport& r) {
  nlohmann::json classes = nlohmann::json::array();
  for (auto i : kAllIntents) {
    const auto c = static_cast<std::size_t>(code(i));
    classes.push_back({{"code", code(i)},
                       {"name", to_string(i)},
                       {"support", r.support[c]},
                       {"precision", r.precision[c]},
                       {"recall", r.recall[c]},
                       {"confusion_row", r.confusion[c]}});
  }
  return {{"total", r.total},
          {"fallbacks", r.fallbacks},
          {"macro_precision", r.macro_precision},
          {"macro_recall", r.macro_recall},
          {"classes", classes}};
}

}  // namespace ledgerlens
