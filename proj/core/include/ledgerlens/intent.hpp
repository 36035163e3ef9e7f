#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/intent_category.hpp"

namespace ledgerlens {

class LlmProvider;

struct IntentResult {
  Intent intent = Intent::BasicInfo;
  bool fallback = false;  // the LLM reply was unusable and the rules decided
};

class IntentClassifier {
 public:
  virtual ~IntentClassifier() = default;
  virtual IntentResult classify(std::string_view question) const = 0;
  virtual std::string_view name() const = 0;
};

// Cue-word rules tried in precedence order; the first rule with a cue in the
// question wins, and no match means BasicInfo.
class RuleClassifier final : public IntentClassifier {
 public:
  struct Rule {
    Intent intent;
    std::vector<std::vector<std::string>> cues;  // each cue is a word sequence
  };

  RuleClassifier();  // shipped default table
  explicit RuleClassifier(std::vector<Rule> rules);

  // {"rules": [{"intent": "Outliers", "cues": ["outlier", "what if", ...]}, ...]}
  static RuleClassifier from_json(const nlohmann::json& doc);
  static RuleClassifier load(const std::filesystem::path& path);

  IntentResult classify(std::string_view question) const override;
  std::string_view name() const override { return "rules"; }
  const std::vector<Rule>& rules() const noexcept { return rules_; }

 private:
  std::vector<Rule> rules_;
};

// One example question per category, used in the classification prompt.
const std::array<std::string, kIntentCount>& intent_examples();
std::string_view intent_description(Intent intent);

std::string classification_prompt(std::string_view question);

// First run of ASCII digits in the text, if any.
std::optional<long long> first_integer(std::string_view text);

// Asks a provider for the category number; falls back to the rules when the
// reply has no integer in 0-8 or the provider fails.
class LlmClassifier final : public IntentClassifier {
 public:
  LlmClassifier(const LlmProvider& provider, RuleClassifier fallback = RuleClassifier());
  IntentResult classify(std::string_view question) const override;
  std::string_view name() const override { return "llm"; }

 private:
  const LlmProvider& provider_;
  RuleClassifier fallback_;
};

struct LabeledQuery {
  std::string question;
  Intent label = Intent::BasicInfo;
};

// JSON-Lines {"question": "...", "label": 0-8 or category name}.
std::vector<LabeledQuery> load_labeled_queries(const std::filesystem::path& path);
std::vector<LabeledQuery> parse_labeled_queries(std::istream& in);

struct ClassifierReport {
  // confusion[truth][predicted]
  std::array<std::array<std::size_t, kIntentCount>, kIntentCount> confusion{};
  std::array<std::size_t, kIntentCount> support{};
  std::array<double, kIntentCount> precision{};  // 0 when a class is never predicted
  std::array<double, kIntentCount> recall{};     // 0 when a class has no support
  double macro_precision = 0.0;                  // over classes with support > 0
  double macro_recall = 0.0;
  std::size_t total = 0;
  std::size_t fallbacks = 0;
};

nlohmann::json to_json(const ClassifierReport& r);

// Throws EmptyDataset for no rows and Error when the sizes differ.
ClassifierReport evaluate_predictions(const std::vector<Intent>& truth, const std::vector<Intent>& predicted);
ClassifierReport evaluate_classifier(const IntentClassifier& classifier, const std::vector<LabeledQuery>& data);

}  // namespace ledgerlens
