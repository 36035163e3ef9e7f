#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "ledgerlens/conversation.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/eval.hpp"
#include "oracles.hpp"

using namespace ledgerlens;

namespace {

EvalRow scored(std::array<bool, 6> flags, std::optional<Intent> label = {}, Intent predicted = Intent::BasicInfo) {
  EvalRow r;
  r.label = label;
  r.predicted = predicted;
  ResponseScores s;
  s.flags = flags;
  s.sum = static_cast<int>(std::count(flags.begin(), flags.end(), true));
  s.confidence = confidence_from_sum(s.sum);
  r.scores = s;
  return r;
}

EvalRow failed() {
  EvalRow r;
  r.status = "error";
  r.error = "boom";
  return r;
}

std::unique_ptr<ConversationService> loaded_with(const std::string& provider) {
  auto cfg = fixtures::service_config();
  cfg.provider = provider;
  auto svc = fixtures::make_service(cfg);
  svc->ingest(fixtures::data_dir() / "table.csv", fixtures::data_dir() / "lexicon.json");
  return svc;
}

}  // namespace

TEST(EvalQueries, LoadsLabelsInEitherForm) {
  fixtures::TempDir tmp("queries");
  fixtures::write_text(tmp / "q.jsonl",
                       "{\"question\": \"a\", \"intent_label\": 2}\n\n{\"question\": \"b\", \"label\": \"Ranking\"}\n"
                       "{\"question\": \"c\"}\n");
  const auto qs = load_eval_queries(tmp / "q.jsonl");
  ASSERT_EQ(qs.size(), 3u);
  EXPECT_EQ(code(*qs[0].label), 2);
  EXPECT_EQ(qs[1].label, Intent::Ranking);
  EXPECT_FALSE(qs[2].label);

  fixtures::write_text(tmp / "empty.jsonl", "\n  \n");
  EXPECT_THROW(load_eval_queries(tmp / "empty.jsonl"), EmptyDataset);
  fixtures::write_text(tmp / "bad.jsonl", "{\"question\": \"a\", \"intent_label\": 12}\n");
  EXPECT_THROW(load_eval_queries(tmp / "bad.jsonl"), SchemaError);
  fixtures::write_text(tmp / "noq.jsonl", "{\"text\": \"a\"}\n");
  EXPECT_THROW(load_eval_queries(tmp / "noq.jsonl"), SchemaError);
  EXPECT_THROW(load_eval_queries(tmp / "missing.jsonl"), Error);
}

TEST(Summarize, AveragesAndFractionsFromRows) {
  std::vector<EvalRow> rows{scored({1, 1, 1, 1, 1, 1}), scored({1, 1, 1, 1, 0, 1}), scored({0, 1, 1, 0, 0, 1}),
                            scored({0, 0, 1, 0, 0, 0}), failed()};
  const auto r = summarize(rows);
  EXPECT_EQ(r.answered, 4u);
  EXPECT_EQ(r.errors, 1u);
  const std::array<double, 6> expect{0.5, 0.75, 1.0, 0.5, 0.25, 0.75};
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(r.averages[i], expect[i]) << i;
  EXPECT_DOUBLE_EQ(r.confidence_fractions[2], 0.5);   // sums 6, 5
  EXPECT_DOUBLE_EQ(r.confidence_fractions[1], 0.25);  // 3
  EXPECT_DOUBLE_EQ(r.confidence_fractions[0], 0.25);  // 1
  EXPECT_FALSE(r.intent);

  const auto none = summarize({failed()});
  EXPECT_EQ(none.answered, 0u);
  for (double a : none.averages) EXPECT_EQ(a, 0.0);
}

TEST(Summarize, IntentMatrixAgreesWithOracle) {
  const std::vector<std::pair<int, int>> pairs{{0, 0}, {0, 1}, {1, 1}, {2, 2}, {2, 0}, {5, 5}, {5, 5}, {8, 2}};
  std::vector<EvalRow> rows;
  std::vector<int> truth, pred;
  for (auto [t, p] : pairs) {
    rows.push_back(scored({1, 1, 1, 1, 1, 1}, intent_from_code(t), *intent_from_code(p)));
    truth.push_back(t);
    pred.push_back(p);
  }
  rows.push_back(scored({1, 1, 1, 1, 1, 1}));  // unlabeled, ignored
  const auto r = summarize(rows);
  ASSERT_TRUE(r.intent);
  const auto o = oracle::precision_recall(truth, pred, kIntentCount);
  for (std::size_t c = 0; c < kIntentCount; ++c) {
    EXPECT_DOUBLE_EQ(r.intent->precision[c], o.precision[c]) << c;
    EXPECT_DOUBLE_EQ(r.intent->recall[c], o.recall[c]) << c;
  }
  EXPECT_DOUBLE_EQ(r.intent->macro_precision, o.macro_precision);
  EXPECT_DOUBLE_EQ(r.intent->macro_recall, o.macro_recall);
}

TEST(RunEval, ShippedQueriesFaithfulAllHigh) {
  auto svc = fixtures::loaded_service();
  const auto qs = load_eval_queries(fixtures::data_dir() / "queries.jsonl");
  const auto r = run_eval(*svc, qs);
  EXPECT_EQ(r.rows.size(), qs.size());
  EXPECT_EQ(r.errors, 0u);
  EXPECT_GE(r.confidence_fractions[2], 0.9);
  ASSERT_TRUE(r.intent);
  EXPECT_DOUBLE_EQ(r.intent->macro_precision, 1.0);
  EXPECT_DOUBLE_EQ(r.intent->macro_recall, 1.0);

  // aggregates recomputed independently from the JSON rows
  const auto j = to_json(r);
  std::array<double, 6> sums{};
  std::size_t answered = 0;
  for (const auto& row : j.at("rows")) {
    if (row.at("status") != "ok") continue;
    ++answered;
    for (int i = 0; i < 6; ++i) sums[i] += row.at("s" + std::to_string(i + 1)).get<int>();
  }
  for (int i = 0; i < 6; ++i)
    EXPECT_DOUBLE_EQ(j.at("averages").at("s" + std::to_string(i + 1)).get<double>(), sums[i] / answered);
  double total = 0;
  for (const auto& [_, v] : j.at("confidence_distribution").items()) total += v.get<double>();
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(RunEval, ParallelKeepsOrderAndResults) {
  const auto qs = load_eval_queries(fixtures::data_dir() / "queries.jsonl");
  auto a = fixtures::loaded_service();
  auto b = fixtures::loaded_service();
  const auto serial = run_eval(*a, qs, 1);
  const auto parallel = run_eval(*b, qs, 4);
  ASSERT_EQ(serial.rows.size(), parallel.rows.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    EXPECT_EQ(parallel.rows[i].question, qs[i].question);
    EXPECT_EQ(parallel.rows[i].answer, serial.rows[i].answer);
    EXPECT_EQ(parallel.rows[i].sources, serial.rows[i].sources);
  }
  EXPECT_EQ(serial.averages, parallel.averages);
  EXPECT_THROW(run_eval(*a, {}), EmptyDataset);
}

TEST(RunEval, FabricatingProviderNeverPassesS2) {
  auto svc = loaded_with("mock-fabricate-number");
  const auto r = run_eval(*svc, load_eval_queries(fixtures::data_dir() / "queries.jsonl"));
  ASSERT_GT(r.answered, 0u);
  EXPECT_EQ(r.averages[1], 0.0);
  // rows the mock could not corrupt are errors, not silent passes
  for (const auto& row : r.rows) {
    if (row.status != "ok") {
      EXPECT_NE(row.error.find("fabricate_number"), std::string::npos) << row.error;
    }
  }
}

TEST(Report, SummaryTable) {
  auto r = summarize({scored({1, 1, 1, 1, 0, 1}, Intent::BasicInfo, Intent::BasicInfo), failed()});
  const auto text = format_summary(r);
  EXPECT_NE(text.find("queries 2  answered 1  errors 1"), std::string::npos) << text;
  EXPECT_NE(text.find("s5       0.000"), std::string::npos) << text;
  EXPECT_NE(text.find("confidence  High 1.000"), std::string::npos) << text;
  EXPECT_NE(text.find("macro            Pr 1.000  Re 1.000"), std::string::npos) << text;
  const auto j = to_json(r);
  EXPECT_EQ(j.at("rows").at(1).at("error"), "boom");
  EXPECT_TRUE(j.at("rows").at(1).at("intent_label").is_null());
}
