#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/intent.hpp"
#include "ledgerlens/score_engine.hpp"

namespace ledgerlens {

class ConversationService;

struct EvalQuery {
  std::string question;
  std::optional<Intent> label;
};

// JSON-Lines {"question": "...", "intent_label"?: 0-8 or name}; "label" is
// accepted as well. Throws EmptyDataset when the file has no queries.
std::vector<EvalQuery> load_eval_queries(const std::filesystem::path& path);

struct EvalRow {
  std::string question;
  std::optional<Intent> label;
  Intent predicted = Intent::BasicInfo;
  std::string status = "ok";
  std::string error;
  std::string answer;
  std::optional<ResponseScores> scores;
  std::vector<std::string> sources;
  int relaxation_stage = 0;
  double latency_seconds = 0.0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::size_t answered = 0;
  std::size_t errors = 0;
  std::array<double, kMetricCount> averages{};      // over answered rows
  std::array<double, 3> confidence_fractions{};     // Low, Medium, High over answered rows
  std::optional<ClassifierReport> intent;           // when some rows carry labels
};

// Recomputes the aggregates from the rows.
EvalReport summarize(std::vector<EvalRow> rows);

// Each query runs on its own fresh thread. jobs > 1 fans out; rows keep the
// input order either way.
EvalReport run_eval(ConversationService& service, const std::vector<EvalQuery>& queries, std::size_t jobs = 1);

nlohmann::json to_json(const EvalReport& report);

// Fixed-width table for terminals.
std::string format_summary(const EvalReport& report);

}  // namespace ledgerlens
