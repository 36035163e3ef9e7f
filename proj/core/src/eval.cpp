#include "ledgerlens/eval.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "ledgerlens/conversation.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

std::optional<Intent> parse_optional_label(const nlohmann::json& j) {
  for (const char* key : {"intent_label", "label"}) {
    if (!j.contains(key) || j.at(key).is_null()) continue;
    const auto& v = j.at(key);
    if (v.is_number_integer()) {
      if (auto i = intent_from_code(v.get<int>())) return i;
    } else if (v.is_string()) {
      if (auto i = intent_from_name(v.get<std::string>())) return i;
    }
    throw SchemaError(std::string(key) + ": not an intent: " + v.dump());
  }
  return std::nullopt;
}

EvalRow run_one(ConversationService& service, const EvalQuery& q) {
  EvalRow row;
  row.question = q.question;
  row.label = q.label;
  try {
    auto r = service.ask(std::nullopt, q.question);
    row.predicted = r.turn.intent;
    row.answer = r.turn.answer;
    row.scores = r.turn.scores;
    row.sources = r.turn.chunk_ids;
    row.relaxation_stage = r.turn.relaxation_stage;
    row.latency_seconds = r.turn.gateway_seconds + r.turn.pipeline_seconds;
  } catch (const Error& e) {
    row.status = "error";
    row.error = e.what();
  }
  return row;
}

}  // namespace

std::vector<EvalQuery> load_eval_queries(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open query file " + path.string());
  std::vector<EvalQuery> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.at("question").get<std::string>(), parse_optional_label(j)});
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path.string() + " line " + std::to_string(n) + ": " + e.what());
    }
  }
  if (out.empty()) throw EmptyDataset();
  return out;
}

EvalReport summarize(std::vector<EvalRow> rows) {
  EvalReport r;
  r.rows = std::move(rows);
  std::array<std::size_t, kMetricCount> ones{};
  std::array<std::size_t, 3> conf{};
  std::vector<Intent> truth, predicted;
  for (const auto& row : r.rows) {
    if (row.label && row.status == "ok") {
      truth.push_back(*row.label);
      predicted.push_back(row.predicted);
    }
    if (row.status != "ok" || !row.scores) {
      ++r.errors;
      continue;
    }
    ++r.answered;
    for (std::size_t i = 0; i < kMetricCount; ++i) ones[i] += row.scores->flags[i] ? 1 : 0;
    ++conf[static_cast<std::size_t>(row.scores->confidence)];
  }
  if (r.answered) {
    const auto n = static_cast<double>(r.answered);
    for (std::size_t i = 0; i < kMetricCount; ++i) r.averages[i] = static_cast<double>(ones[i]) / n;
    for (std::size_t i = 0; i < 3; ++i) r.confidence_fractions[i] = static_cast<double>(conf[i]) / n;
  }
  if (!truth.empty()) r.intent = evaluate_predictions(truth, predicted);
  return r;
}

EvalReport run_eval(ConversationService& service, const std::vector<EvalQuery>& queries, std::size_t jobs) {
  if (queries.empty()) throw EmptyDataset();
  std::vector<EvalRow> rows(queries.size());
  jobs = std::max<std::size_t>(1, std::min(jobs, queries.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < queries.size(); ++i) rows[i] = run_one(service, queries[i]);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
      pool.emplace_back([&] {
        for (auto i = next++; i < queries.size(); i = next++) rows[i] = run_one(service, queries[i]);
      });
    }
    for (auto& t : pool) t.join();
  }
  return summarize(std::move(rows));
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json j{{"question", r.question},
                     {"predicted_intent", code(r.predicted)},
                     {"status", r.status},
                     {"sources", r.sources},
                     {"relaxation_stage", r.relaxation_stage},
                     {"latency_seconds", r.latency_seconds}};
    j["intent_label"] = r.label ? nlohmann::json(code(*r.label)) : nlohmann::json(nullptr);
    if (r.scores) {
      const nlohmann::json scores = *r.scores;
      for (const auto& [k, v] : scores.items()) j[k] = v;
    }
    if (!r.error.empty()) j["error"] = r.error;
    j["answer"] = r.answer;
    rows.push_back(std::move(j));
  }
  nlohmann::json averages = nlohmann::json::object();
  for (std::size_t i = 0; i < kMetricCount; ++i) averages["s" + std::to_string(i + 1)] = report.averages[i];
  nlohmann::json j{{"queries", report.rows.size()},
                   {"answered", report.answered},
                   {"errors", report.errors},
                   {"averages", averages},
                   {"confidence_distribution",
                    {{"Low", report.confidence_fractions[0]},
                     {"Medium", report.confidence_fractions[1]},
                     {"High", report.confidence_fractions[2]}}},
                   {"rows", rows}};
  if (report.intent) j["intent"] = to_json(*report.intent);
  return j;
}

std::string format_summary(const EvalReport& report) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "queries %zu  answered %zu  errors %zu\n", report.rows.size(), report.answered,
                report.errors);
  out += buf;
  out += "metric   mean\n";
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    std::snprintf(buf, sizeof buf, "s%zu       %.3f\n", i + 1, report.averages[i]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "confidence  High %.3f  Medium %.3f  Low %.3f\n", report.confidence_fractions[2],
                report.confidence_fractions[1], report.confidence_fractions[0]);
  out += buf;
  if (report.intent) {
    out += "intent           support  Pr     Re\n";
    for (auto i : kAllIntents) {
      const auto c = static_cast<std::size_t>(code(i));
      std::snprintf(buf, sizeof buf, "%d %-14s %7zu  %.3f  %.3f\n", code(i), std::string(to_string(i)).c_str(),
                    report.intent->support[c], report.intent->precision[c], report.intent->recall[c]);
      out += buf;
    }
    std::snprintf(buf, sizeof buf, "macro            Pr %.3f  Re %.3f\n", report.intent->macro_precision,
                  report.intent->macro_recall);
    out += buf;
  }
  return out;
}

}  // namespace ledgerlens
