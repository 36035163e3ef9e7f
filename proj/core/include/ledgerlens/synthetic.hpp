#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/intent_category.hpp"
#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/table.hpp"

namespace ledgerlens {

// Generated tables for benchmarks and large-scale tests.
struct SyntheticSpec {
  std::size_t metrics = 6;  // at most 12
  std::size_t geos = 20;
  std::size_t regions = 4;  // parents of the geos
  std::size_t years = 2;    // four quarters each
  std::uint64_t seed = 7;
};

struct SyntheticData {
  nlohmann::json lexicon;
  std::vector<TableRecord> records;
};

SyntheticData make_synthetic(const SyntheticSpec& spec);

// Smallest geo count whose chunk set has at least `chunks` chunks for the
// other settings of base.
SyntheticSpec spec_for_chunk_count(std::size_t chunks, SyntheticSpec base = {});

// Words the question generator uses, so spell correction leaves them alone.
const std::vector<std::string>& question_vocabulary();

struct GeneratedQuestion {
  std::string question;
  Intent label = Intent::BasicInfo;
};

// Questions over the lexicon's entities, cycling through the nine intents.
// Periods are drawn from `periods` when given (leaf periods present in the
// table), otherwise from the lexicon's leaf periods.
std::vector<GeneratedQuestion> generate_questions(const KeywordDictionary& dict, std::size_t n, std::uint64_t seed,
                                                  const std::vector<std::string>& periods = {});

}  // namespace ledgerlens
