#include <gtest/gtest.h>

#include <atomic>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include "fixtures.hpp"
#include "ledgerlens/atomic_file.hpp"
#include "ledgerlens/conversation.hpp"
#include "ledgerlens/errors.hpp"

using namespace ledgerlens;
namespace fs = std::filesystem;

namespace {

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  }
  return out;
}

// Same table with every value doubled, so answers differ between the two.
void write_doubled_table(const fs::path& out) {
  std::istringstream in(read_file(fixtures::data_dir() / "table.csv"));
  std::string line, body;
  std::getline(in, line);
  body = line + "\n";
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", std::stod(f[3]) * 2);
    body += f[0] + "," + f[1] + "," + f[2] + "," + buf + "," + f[4] + "\n";
  }
  fixtures::write_text(out, body);
}

ProviderRegistry failing_registry() {
  ProviderRegistry reg;
  ProviderConfig cfg;
  cfg.name = "mock-faithful";  // same name the default config asks for
  reg.add(make_callback_provider(cfg, [](const CompletionRequest&) -> std::string {
    throw ProviderError(503, "upstream down");
  }));
  return reg;
}

}  // namespace

TEST(Service, FirstQuestionHasSourcesAndConfidence) {
  auto svc = fixtures::loaded_service();
  EXPECT_EQ(svc->store_size(), 206u);
  const auto r = svc->ask(std::nullopt, "What was Revenue in Germany for FY22-Q1?");
  EXPECT_EQ(r.thread_id, "thread-1");
  EXPECT_EQ(r.turn_index, 0u);
  EXPECT_FALSE(r.turn.chunk_ids.empty());
  EXPECT_LE(r.turn.chunk_ids.size(), svc->config().k);
  ASSERT_TRUE(r.turn.scores);
  EXPECT_EQ(r.turn.scores->confidence, Confidence::High);
  EXPECT_NE(r.turn.answer.find("474.88"), std::string::npos) << r.turn.answer;
  EXPECT_TRUE(r.turn.inherited.empty());

  const auto p = ask_payload(r);
  for (const char* key : {"answer", "sources", "intent", "relaxation_stage", "confidence", "s1", "s6", "thread_id"})
    EXPECT_TRUE(p.contains(key)) << key;
  EXPECT_EQ(p.at("sources").size(), r.turn.chunk_ids.size());
}

TEST(Service, FollowUpInheritsMissingDimensions) {
  auto svc = fixtures::loaded_service();
  const auto first = svc->ask(std::nullopt, "What was Revenue in Germany for FY22-Q1?");
  const auto next = svc->ask(first.thread_id, "and what about France?");
  EXPECT_EQ(next.turn_index, 1u);
  EXPECT_EQ(next.turn.entities.geos, std::set<std::string>{"France"});
  EXPECT_EQ(next.turn.entities.metrics, std::set<std::string>{"Revenue"});
  EXPECT_EQ(next.turn.entities.periods, std::set<std::string>{"FY22-Q1"});
  EXPECT_EQ(next.turn.inherited, (std::vector<std::string>{"metrics", "periods"}));
  EXPECT_NE(next.turn.answer.find("France"), std::string::npos) << next.turn.answer;

  // a fresh thread never inherits
  const auto fresh = svc->ask(std::nullopt, "and what about France?");
  EXPECT_TRUE(fresh.turn.inherited.empty());
  EXPECT_NE(fresh.thread_id, first.thread_id);

  const auto t = svc->thread(first.thread_id);
  ASSERT_EQ(t.turns.size(), 2u);
  EXPECT_EQ(t.cached_selection(), next.turn.chunk_ids);
}

TEST(Service, Errors) {
  auto empty = fixtures::make_service(fixtures::service_config());
  EXPECT_THROW(empty->ask(std::nullopt, "What was GDP?"), EmptyStore);
  auto svc = fixtures::loaded_service();
  EXPECT_THROW(svc->ask(std::string("thread-99"), "What was GDP?"), UnknownThread);
  EXPECT_THROW(svc->ask(std::string("../etc"), "What was GDP?"), UnknownThread);
  EXPECT_THROW(svc->thread("nope"), UnknownThread);
  auto cfg = fixtures::service_config();
  cfg.provider = "no-such-provider";
  EXPECT_THROW(fixtures::make_service(cfg), UnknownProvider);
}

TEST(Service, GatewayFailureIsRecordedAsErrorTurn) {
  ConversationService svc(fixtures::service_config(), failing_registry(), fixtures::templates());
  svc.ingest(fixtures::data_dir() / "table.csv", fixtures::data_dir() / "lexicon.json");
  EXPECT_THROW(svc.ask(std::nullopt, "What was GDP in Japan?"), ProviderError);
  const auto ids = svc.thread_ids();
  ASSERT_EQ(ids.size(), 1u);
  const auto t = svc.thread(ids[0]);
  ASSERT_EQ(t.turns.size(), 1u);
  EXPECT_EQ(t.turns[0].status, "error");
  EXPECT_FALSE(t.turns[0].scores);
  EXPECT_NE(t.turns[0].error.find("503"), std::string::npos) << t.turns[0].error;
  const auto m = svc.metrics();
  EXPECT_EQ(m.errors, 1u);
  EXPECT_EQ(m.answered, 0u);
}

TEST(Service, IngestIsDeterministicAndFailuresKeepTheOldStore) {
  fixtures::TempDir tmp("ingest");
  auto svc = fixtures::loaded_service();
  const auto before = svc->knowledge_base();
  fixtures::write_text(tmp / "bad.csv", "metric,geo,period,value,unit\nGDP,Germany,FY23-Q1,not-a-number,%\n");
  EXPECT_THROW(svc->ingest(tmp / "bad.csv", fixtures::data_dir() / "lexicon.json"), Error);
  EXPECT_EQ(svc->knowledge_base(), before);
  EXPECT_THROW(svc->ingest(fixtures::data_dir() / "table.csv", tmp / "missing.json"), Error);
  EXPECT_EQ(svc->knowledge_base(), before);

  svc->ingest(fixtures::data_dir() / "table.csv", fixtures::data_dir() / "lexicon.json");
  const auto after = svc->knowledge_base();
  EXPECT_NE(after, before);
  ASSERT_EQ(after->store.size(), before->store.size());
  for (std::size_t i = 0; i < after->store.size(); ++i)
    EXPECT_EQ(after->store.chunks()[i].id, before->store.chunks()[i].id);
}

TEST(Service, EveryAskSeesOneStoreVersion) {
  fixtures::TempDir tmp("swap");
  write_doubled_table(tmp / "doubled.csv");
  const auto lexicon = fixtures::data_dir() / "lexicon.json";
  const std::vector<std::string> questions{"What was Revenue in Germany for FY22-Q1?", "What was GDP in Japan for FY23?",
                                           "How did CPI in France change over FY22?"};
  // reference answers from services that only ever held one version
  std::vector<std::set<std::string>> allowed(questions.size());
  for (const auto& table : {fixtures::data_dir() / "table.csv", tmp / "doubled.csv"}) {
    auto ref = fixtures::make_service(fixtures::service_config());
    ref->ingest(table, lexicon);
    for (std::size_t i = 0; i < questions.size(); ++i) allowed[i].insert(ref->ask(std::nullopt, questions[i]).turn.answer);
  }
  for (const auto& a : allowed) ASSERT_EQ(a.size(), 2u);

  auto svc = fixtures::loaded_service();
  std::atomic<bool> stop{false};
  std::thread writer([&] {
    for (int i = 0; !stop; ++i) svc->ingest(i % 2 ? fixtures::data_dir() / "table.csv" : tmp / "doubled.csv", lexicon);
  });
  std::atomic<int> bad{0}, asked{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&, r] {
      for (int i = 0; i < 20; ++i) {
        const auto q = static_cast<std::size_t>(r + i) % questions.size();
        const auto res = svc->ask(std::nullopt, questions[q]);
        ++asked;
        if (!allowed[q].count(res.turn.answer)) ++bad;
      }
    });
  }
  for (auto& t : readers) t.join();
  stop = true;
  writer.join();
  EXPECT_EQ(asked.load(), 60);
  EXPECT_EQ(bad.load(), 0);
}

TEST(Service, ConcurrentAsksOnOneThreadNeverInterleave) {
  auto svc = fixtures::loaded_service();
  const auto id = svc->ask(std::nullopt, "What was GDP in Japan for FY23?").thread_id;
  std::vector<std::thread> ts;
  for (int i = 0; i < 4; ++i) {
    ts.emplace_back([&, i] {
      for (int j = 0; j < 5; ++j) svc->ask(id, "and in " + std::string(i % 2 ? "France" : "India") + "?");
    });
  }
  for (auto& t : ts) t.join();
  const auto t = svc->thread(id);
  EXPECT_EQ(t.turns.size(), 21u);
  for (std::size_t i = 1; i < t.turns.size(); ++i) EXPECT_LE(t.turns[i - 1].finished_at, t.turns[i].started_at);
}

TEST(Service, RestartRestoresStoreAndThreadsByteIdentically) {
  fixtures::TempDir tmp("restart");
  const auto cfg = fixtures::service_config(tmp.path() / "state");
  std::vector<nlohmann::json> threads;
  std::map<std::string, std::string> files;
  nlohmann::json metrics;
  {
    auto svc = fixtures::loaded_service(cfg.state_dir);
    const auto a = svc->ask(std::nullopt, "What was Revenue in Germany for FY22-Q1?");
    svc->ask(a.thread_id, "and what about France?");
    svc->ask(std::nullopt, "Which region had the highest GDP growth in FY23?");
    for (const auto& id : svc->thread_ids()) threads.push_back(to_json(svc->thread(id)));
    metrics = to_json(svc->metrics());
    files = snapshot(cfg.state_dir);
  }
  EXPECT_TRUE(files.count("store/chunks.jsonl"));
  EXPECT_TRUE(files.count("store/lexicon.json"));
  EXPECT_TRUE(files.count("threads/thread-1.jsonl"));

  auto back = ConversationService::create(cfg);
  EXPECT_EQ(back->store_size(), 206u);
  std::vector<nlohmann::json> restored;
  for (const auto& id : back->thread_ids()) restored.push_back(to_json(back->thread(id)));
  EXPECT_EQ(restored, threads);
  EXPECT_EQ(to_json(back->metrics()), metrics);
  EXPECT_EQ(snapshot(cfg.state_dir), files);

  // numbering continues after the restored threads
  EXPECT_EQ(back->ask(std::nullopt, "What was GDP in Japan?").thread_id, "thread-3");
}

TEST(Service, MetricsMatchARecount) {
  auto svc = fixtures::loaded_service();
  auto m0 = svc->metrics();
  EXPECT_EQ(m0.answered, 0u);
  for (const auto& a : m0.averages) EXPECT_FALSE(a);
  const auto j0 = to_json(m0);
  EXPECT_TRUE(j0.at("averages").at("s1").is_null());
  EXPECT_EQ(j0.at("confidence_counts").at("High"), 0);

  for (const char* q : {"What was Revenue in Germany for FY22-Q1?", "What was GDP in Japan?", "Tell me about the weather",
                        "How did CPI in France change over FY22?", "Which region had the highest Net Margin?"}) {
    svc->ask(std::nullopt, q);
  }
  std::size_t answered = 0;
  std::array<std::size_t, 6> ones{};
  std::array<std::size_t, 3> conf{};
  for (const auto& id : svc->thread_ids()) {
    for (const auto& t : svc->thread(id).turns) {
      ++answered;
      for (int i = 0; i < 6; ++i) ones[i] += t.scores->flags[i];
      ++conf[static_cast<int>(t.scores->confidence)];
    }
  }
  const auto m = svc->metrics();
  EXPECT_EQ(m.answered, answered);
  for (int i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(*m.averages[i], double(ones[i]) / answered) << i;
  EXPECT_EQ(m.confidence_counts, conf);
  const auto j = to_json(m);
  double total = 0;
  for (const auto& [_, v] : j.at("confidence_fractions").items()) total += v.get<double>();
  EXPECT_NEAR(total, 1.0, 1e-9);
}

TEST(Config, LoadsShippedFileAndValidates) {
  const auto cfg = ServiceConfig::load(fixtures::data_dir() / "service.json");
  EXPECT_EQ(cfg.listen_port, 8080);
  EXPECT_EQ(cfg.auth_token_env, "LEDGERLENS_API_TOKEN");
  EXPECT_TRUE(cfg.providers_file.is_absolute() || fs::exists(cfg.providers_file));
  EXPECT_THROW(ServiceConfig::from_json({{"k", 0}}), SchemaError);
  EXPECT_THROW(ServiceConfig::from_json({{"delta", 1}}), SchemaError);
  EXPECT_THROW(ServiceConfig::from_json({{"classifier", "coin"}}), SchemaError);
  const auto round = ServiceConfig::from_json(to_json(cfg));
  EXPECT_EQ(to_json(round), to_json(cfg));
}
