// ledgerlens command-line front end.
#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ledgerlens/atomic_file.hpp"
#include "ledgerlens/chunk_forge.hpp"
#include "ledgerlens/conversation.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/eval.hpp"
#include "ledgerlens/http_api.hpp"
#include "ledgerlens/synthetic.hpp"
#include "ledgerlens/table.hpp"

namespace fs = std::filesystem;
using namespace ledgerlens;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitOverBudget = 2;
constexpr double kLatencyBudgetSeconds = 3.0;

fs::path default_data_dir() {
  if (const char* env = std::getenv("LEDGERLENS_DATA_DIR"); env && *env) return env;
  return LEDGERLENS_DEFAULT_DATA_DIR;
}

struct Common {
  fs::path data_dir = default_data_dir();
  fs::path lexicon;
  fs::path templates;
  fs::path providers;
  fs::path rules;
  bool verbose = false;

  fs::path lexicon_path() const { return lexicon.empty() ? data_dir / "lexicon.json" : lexicon; }
  fs::path templates_path() const { return templates.empty() ? data_dir / "templates" : templates; }
  fs::path providers_path() const { return providers.empty() ? data_dir / "providers.json" : providers; }
  fs::path rules_path() const { return rules.empty() ? data_dir / "intent_rules.json" : rules; }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--data-dir", c.data_dir, "Directory with lexicon, templates and provider files");
  cmd->add_option("--lexicon", c.lexicon, "Lexicon JSON (default: <data-dir>/lexicon.json)");
  cmd->add_option("--templates", c.templates, "Prompt template directory");
  cmd->add_option("--providers", c.providers, "Provider registry JSON");
  cmd->add_option("--rules", c.rules, "Intent rule table JSON");
}

ServiceConfig service_config(const Common& c, const std::string& provider, const fs::path& state_dir) {
  ServiceConfig cfg;
  cfg.provider = provider;
  cfg.templates_dir = c.templates_path();
  cfg.providers_file = c.providers_path();
  cfg.rules_file = c.rules_path();
  cfg.state_dir = state_dir;
  return cfg;
}

std::unique_ptr<ConversationService> open_service(const ServiceConfig& cfg) {
  auto registry = ProviderRegistry::load(cfg.providers_file);
  auto templates = load_templates(cfg.templates_dir);
  return std::make_unique<ConversationService>(cfg, std::move(registry), std::move(templates));
}

void print_flags(const ResponseScores& s) {
  for (std::size_t i = 1; i <= kMetricCount; ++i) std::printf("s%zu=%d ", i, s.s(i) ? 1 : 0);
  std::printf("sum=%d confidence=%s\n", s.sum, std::string(to_string(s.confidence)).c_str());
  for (const auto& d : s.diagnostics) std::printf("  %s\n", d.c_str());
}

// --- ingest ---------------------------------------------------------------------

struct IngestArgs {
  Common common;
  fs::path table;
  fs::path out;
  double anomaly = 2.0;
  double correlation = 0.7;
};

int run_ingest(const IngestArgs& a) {
  auto lexicon = load_lexicon(a.common.lexicon_path());
  auto records = ingest_table(a.table);
  TrendOptions trend;
  trend.anomaly_threshold = a.anomaly;
  trend.correlation_threshold = a.correlation;
  auto set = forge_chunks(records, lexicon, trend);
  save_chunks(a.out, set.chunks);
  std::printf("records %zu\nprimary %zu\nfeature %zu\ntrend %zu\nchunks %zu\n", records.size(), set.primary,
              set.feature, set.trend, set.chunks.size());
  return kExitOk;
}

// --- ask --------------------------------------------------------------------------

struct AskArgs {
  Common common;
  std::string question;
  fs::path chunks;
  std::string provider = "mock-faithful";
  std::string thread;
  fs::path state = ".ledgerlens";
  bool json = false;
};

int run_ask(const AskArgs& a) {
  auto svc = open_service(service_config(a.common, a.provider, a.state));
  svc->restore();
  svc->install(load_chunks(a.chunks), load_lexicon(a.common.lexicon_path()));
  std::optional<std::string> thread;
  if (!a.thread.empty()) thread = a.thread;
  auto r = svc->ask(thread, a.question);
  if (a.json) {
    std::printf("%s\n", ask_payload(r).dump(2).c_str());
    return kExitOk;
  }
  std::printf("thread %s turn %zu\n", r.thread_id.c_str(), r.turn_index);
  std::printf("intent %d %s\n", code(r.turn.intent), std::string(to_string(r.turn.intent)).c_str());
  std::printf("answer:\n%s\n", r.turn.answer.c_str());
  if (r.turn.scores) print_flags(*r.turn.scores);
  std::printf("sources:");
  for (const auto& id : r.turn.chunk_ids) std::printf(" %s", id.c_str());
  std::printf("\n");
  return kExitOk;
}

// --- eval -------------------------------------------------------------------------

struct EvalArgs {
  Common common;
  fs::path queries;
  std::string provider = "mock-faithful";
  fs::path report;
  fs::path chunks;
  fs::path table;
  std::size_t jobs = 1;
};

int run_eval_cmd(const EvalArgs& a) {
  const auto queries = load_eval_queries(a.queries);
  auto svc = open_service(service_config(a.common, a.provider, {}));
  if (!a.chunks.empty()) {
    svc->install(load_chunks(a.chunks), load_lexicon(a.common.lexicon_path()));
  } else {
    svc->ingest(a.table.empty() ? a.common.data_dir / "table.csv" : a.table, a.common.lexicon_path());
  }
  const auto report = run_eval(*svc, queries, a.jobs);
  if (!a.report.empty()) write_file_atomic(a.report, to_json(report).dump(2) + "\n");
  std::printf("%s", format_summary(report).c_str());
  return kExitOk;
}

// --- bench ------------------------------------------------------------------------

struct BenchArgs {
  Common common;
  std::size_t chunks = 0;
  std::size_t queries = 200;
  std::uint64_t seed = 42;
  std::size_t k = kDefaultTopK;
};

double percentile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  // nearest-rank
  const auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(v.size())));
  return v[std::min(v.size(), std::max<std::size_t>(rank, 1)) - 1];
}

int run_bench(const BenchArgs& a) {
  using Clock = std::chrono::steady_clock;
  auto secs = [](Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); };

  const auto t_gen = Clock::now();
  auto spec = spec_for_chunk_count(a.chunks);
  spec.seed = a.seed;
  auto data = make_synthetic(spec);
  auto lexicon = KeywordDictionary::from_json(data.lexicon);
  auto set = forge_chunks(data.records, lexicon);
  std::mt19937_64 rng(a.seed);
  std::shuffle(set.chunks.begin(), set.chunks.end(), rng);
  if (set.chunks.size() > a.chunks) set.chunks.resize(a.chunks);
  const double gen_seconds = secs(t_gen);

  const auto t_build = Clock::now();
  HashingEmbedder embedder;
  auto store = ChunkStore::build(std::move(set.chunks), embedder);
  const double build_seconds = secs(t_build);

  const auto templates = load_templates(a.common.templates_path());
  const auto questions = generate_questions(lexicon, a.queries, a.seed);
  std::vector<double> latencies;
  latencies.reserve(questions.size());
  std::size_t selected = 0;
  for (const auto& q : questions) {
    const auto t0 = Clock::now();
    const auto corrected = spell_correct(q.question, lexicon);
    const auto entities = extract_entities(corrected, lexicon);
    const auto candidates = filter_chunks(store, expand_hierarchy(entities, lexicon));
    const auto selection = rank_chunks(corrected, candidates, store, embedder, a.k);
    auto request = make_prompt_request(corrected, q.label, entities, selection, store);
    const auto bundle = build_prompt(request, templates, lexicon);
    latencies.push_back(secs(t0));
    selected += bundle.chunks.size();
  }
  const double p50 = percentile(latencies, 0.50);
  const double p95 = percentile(latencies, 0.95);
  const double mean = std::accumulate(latencies.begin(), latencies.end(), 0.0) / static_cast<double>(latencies.size());
  const double worst = *std::max_element(latencies.begin(), latencies.end());

  std::printf("chunks      %zu\n", store.size());
  std::printf("queries     %zu\n", latencies.size());
  std::printf("generate_s  %.3f\n", gen_seconds);
  std::printf("index_s     %.3f\n", build_seconds);
  std::printf("mean_s      %.6f\n", mean);
  std::printf("p50_s       %.6f\n", p50);
  std::printf("p95_s       %.6f\n", p95);
  std::printf("max_s       %.6f\n", worst);
  std::printf("avg_chunks  %.2f\n", static_cast<double>(selected) / static_cast<double>(latencies.size()));
  std::printf("budget_s    %.1f %s\n", kLatencyBudgetSeconds, p95 < kLatencyBudgetSeconds ? "PASS" : "FAIL");
  return p95 < kLatencyBudgetSeconds ? kExitOk : kExitOverBudget;
}

// --- serve ------------------------------------------------------------------------

struct ServeArgs {
  fs::path config;
  std::string host;
  int port = -1;
};

ApiServer* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

int run_serve(const ServeArgs& a) {
  auto cfg = ServiceConfig::load(a.config);
  if (!a.host.empty()) cfg.listen_host = a.host;
  if (a.port >= 0) cfg.listen_port = a.port;
  auto svc = ConversationService::create(cfg);
  std::string token;
  if (const char* t = std::getenv(cfg.auth_token_env.c_str()); t && *t) token = t;
  ApiServer server(*svc, token);
  const int port = server.bind(cfg.listen_host, cfg.listen_port);
  if (port < 0) throw Error("cannot bind " + cfg.listen_host + ":" + std::to_string(cfg.listen_port));
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  spdlog::info("listening on {}:{} (store {} chunks, provider {})", cfg.listen_host, port, svc->store_size(),
               cfg.provider);
  std::printf("listening on %s:%d\n", cfg.listen_host.c_str(), port);
  std::fflush(stdout);
  server.listen();
  g_server = nullptr;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ledgerlens: tables to scored answers"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Turn a CSV table into chunk JSON-Lines");
  add_common(c_ingest, ingest.common);
  c_ingest->add_option("--table", ingest.table, "CSV table")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--out", ingest.out, "Output chunk file")->required();
  c_ingest->add_option("--anomaly-threshold", ingest.anomaly, "|z| at which a value is flagged");
  c_ingest->add_option("--correlation-threshold", ingest.correlation, "|r| at which a correlation is reported");

  AskArgs ask;
  auto* c_ask = app.add_subcommand("ask", "Answer one question");
  add_common(c_ask, ask.common);
  c_ask->add_option("question", ask.question, "Question text")->required();
  c_ask->add_option("--chunks", ask.chunks, "Chunk JSON-Lines")->required()->check(CLI::ExistingFile);
  c_ask->add_option("--provider", ask.provider, "Provider name from the registry");
  c_ask->add_option("--thread", ask.thread, "Continue this thread");
  c_ask->add_option("--state", ask.state, "Directory for persisted threads");
  c_ask->add_flag("--json", ask.json, "Print the answer payload as JSON");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "Score a batch of questions");
  add_common(c_eval, eval.common);
  c_eval->add_option("--queries", eval.queries, "JSON-Lines questions")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--provider", eval.provider, "Provider name from the registry");
  c_eval->add_option("--report", eval.report, "Write the JSON report here");
  c_eval->add_option("--chunks", eval.chunks, "Chunk JSON-Lines (default: ingest --table)");
  c_eval->add_option("--table", eval.table, "CSV table (default: <data-dir>/table.csv)");
  c_eval->add_option("--jobs", eval.jobs, "Concurrent questions")->check(CLI::PositiveNumber);

  BenchArgs bench;
  auto* c_bench = app.add_subcommand("bench", "Time retrieval and prompt assembly on a synthetic store");
  add_common(c_bench, bench.common);
  c_bench->add_option("--chunks", bench.chunks, "Store size")->required()->check(CLI::PositiveNumber);
  c_bench->add_option("--queries", bench.queries, "Questions to time")->check(CLI::PositiveNumber);
  c_bench->add_option("--seed", bench.seed, "Generator seed");
  c_bench->add_option("--k", bench.k, "Chunks per prompt")->check(CLI::PositiveNumber);

  ServeArgs serve;
  auto* c_serve = app.add_subcommand("serve", "Run the HTTP API");
  c_serve->add_option("--config", serve.config, "Service config JSON")
      ->default_str((default_data_dir() / "service.json").string())
      ->check(CLI::ExistingFile);
  serve.config = default_data_dir() / "service.json";
  c_serve->add_option("--host", serve.host, "Listen address");
  c_serve->add_option("--port", serve.port, "Listen port (0 picks one)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }
  spdlog::set_default_logger(spdlog::stderr_color_mt("ledgerlens"));
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  try {
    if (*c_ingest) return run_ingest(ingest);
    if (*c_ask) return run_ask(ask);
    if (*c_eval) return run_eval_cmd(eval);
    if (*c_bench) return run_bench(bench);
    if (*c_serve) return run_serve(serve);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
