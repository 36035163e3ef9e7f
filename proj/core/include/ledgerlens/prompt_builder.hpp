#pragma once

#include <array>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ledgerlens/chunk.hpp"
#include "ledgerlens/intent_category.hpp"
#include "ledgerlens/lexicon.hpp"

namespace ledgerlens {

class ChunkStore;
struct RankedSelection;

inline constexpr std::size_t kDefaultTokenLimit = 4096;
inline constexpr double kDefaultTokenMultiplier = 1.3;

// ceil(whitespace words * multiplier)
std::size_t estimate_tokens(std::string_view text, double multiplier = kDefaultTokenMultiplier);

// Per-intent prompt pieces read from a template file.
struct PromptTemplate {
  Intent intent = Intent::BasicInfo;
  std::string introduction;
  std::vector<std::string> instructions;
  std::string example;
};

using TemplateSet = std::array<PromptTemplate, kIntentCount>;

// Parses one template file body ("---SECTION:<name>---" markers, sections
// introduction / instructions / example). Throws MalformedTemplate.
PromptTemplate parse_template(std::string_view body, Intent intent);

// One "<code>_<anything>.txt" (or "<code>.txt") file per intent code 0-8.
// Throws MissingTemplate or MalformedTemplate.
TemplateSet load_templates(const std::filesystem::path& dir);

// Guardrail sentences prepended to every introduction.
extern const std::string kGuardrailText;
extern const std::string kCannotAnswer;  // "I cannot answer the question."
extern const std::string kBulletInstruction;

struct PriorTurn {
  std::string question;
  std::string answer;
};

// Section names in their fixed order inside the prompt text.
inline constexpr std::array<std::string_view, 7> kSectionNames{
    "introduction", "preamble", "context", "instructions", "example", "history", "question"};

struct PromptSections {
  std::string introduction;
  std::string preamble;
  std::string context;
  std::string instructions;
  std::string example;
  std::string history;  // empty when the thread has no prior turns
  std::string question;

  const std::string& get(std::string_view name) const;
};

struct PromptBundle {
  std::string text;
  PromptSections sections;
  std::string question;
  Intent intent = Intent::BasicInfo;
  NamedEntities query_entities;        // as asked, before hierarchy expansion
  std::vector<DataChunk> chunks;       // rank order, after trimming
  std::vector<double> chunk_scores;
  std::vector<std::string> definitions;
  std::size_t estimated_tokens = 0;
  int relaxation_stage = 0;

  std::vector<std::string> chunk_ids() const;
};

struct PromptRequest {
  std::string question;
  Intent intent = Intent::BasicInfo;
  NamedEntities query_entities;
  std::vector<DataChunk> ranked_chunks;  // best first
  std::vector<double> scores;            // parallel to ranked_chunks
  int relaxation_stage = 0;
  std::vector<PriorTurn> history;
};

struct PromptOptions {
  std::size_t token_limit = kDefaultTokenLimit;
  double token_multiplier = kDefaultTokenMultiplier;
};

// Definitions for the query metrics, then hierarchy facts linking query
// geos/periods to related entities that the chunks actually mention.
std::string build_preamble(const NamedEntities& query_entities, const KeywordDictionary& dict,
                           const std::vector<DataChunk>& chunks);

// Assembles the sections, then drops the lowest-ranked chunks one at a time
// until the estimate fits. Throws PromptOverflow when a single chunk does
// not fit.
PromptBundle build_prompt(const PromptRequest& request, const TemplateSet& templates,
                          const KeywordDictionary& dict, const PromptOptions& options = {});

// Convenience: pulls the selected chunks out of a store.
PromptRequest make_prompt_request(std::string question, Intent intent, NamedEntities query_entities,
                                  const RankedSelection& selection, const ChunkStore& store);

}  // namespace ledgerlens
