#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/chunk.hpp"
#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/numbers.hpp"

namespace ledgerlens {

struct PromptBundle;

inline constexpr std::size_t kDefaultDelta = 10;
inline constexpr std::size_t kMetricCount = 6;

enum class Confidence { Low, Medium, High };

std::string_view to_string(Confidence c);
Confidence parse_confidence(std::string_view s);

// sum >= 5 High, 3..4 Medium, otherwise Low.
Confidence confidence_from_sum(int sum);
Confidence confidence(const std::array<bool, kMetricCount>& flags);

struct ResponseScores {
  std::array<bool, kMetricCount> flags{};
  int sum = 0;
  Confidence confidence = Confidence::Low;
  std::vector<std::string> diagnostics;  // one line per failed metric, "s<n>: reason"

  bool s(std::size_t n) const { return flags.at(n - 1); }  // 1-based
};

void to_json(nlohmann::json& j, const ResponseScores& s);
void from_json(const nlohmann::json& j, ResponseScores& s);

// s1: each query entity, expanded through the hierarchy, meets the response
// entity set. Only the query side is expanded, so an annual figure does not
// answer a quarterly question.
bool score_s1(const NamedEntities& query, const NamedEntities& response, const KeywordDictionary& dict,
              std::string* reason = nullptr);

// s2: every response number occurs among the chunk numbers.
bool score_s2(std::string_view response, const std::vector<DataChunk>& chunks, std::string* reason = nullptr);

// s3: no run of delta or more normalized words is shared with the prompt.
bool score_s3(std::string_view prompt, std::string_view response, std::size_t delta = kDefaultDelta,
              std::string* reason = nullptr);

// s4: no sentence pairs positive polarity with a negative number, or
// negative polarity with an explicitly positive number.
bool score_s4(std::string_view response, std::string* reason = nullptr);
// Same, with lexicon entity names blanked first ("GDP growth" is a metric,
// not a claim about direction).
bool score_s4(std::string_view response, const KeywordDictionary& dict, std::string* reason = nullptr);

// s5: every chunk's metrics are among the query metrics.
bool score_s5(const NamedEntities& query, const std::vector<DataChunk>& chunks, std::string* reason = nullptr);

// s6: every number in a response sentence is backed by a context sentence
// holding that number whose expanded entities cover the response sentence's.
bool score_s6(std::string_view response, const std::vector<DataChunk>& chunks, const KeywordDictionary& dict,
              std::string* reason = nullptr);

struct ScoreOptions {
  std::size_t delta = kDefaultDelta;
};

ResponseScores score_response(const PromptBundle& bundle, std::string_view response, const KeywordDictionary& dict,
                              const ScoreOptions& options = {});

}  // namespace ledgerlens
