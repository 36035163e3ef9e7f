#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/chunk_forge.hpp"
#include "ledgerlens/embedder.hpp"
#include "ledgerlens/intent.hpp"
#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/llm_gateway.hpp"
#include "ledgerlens/prompt_builder.hpp"
#include "ledgerlens/ranker.hpp"
#include "ledgerlens/score_engine.hpp"

namespace ledgerlens {

inline constexpr std::size_t kDefaultHistoryTurns = 3;

struct ServiceConfig {
  std::string provider = "mock-faithful";
  std::string classifier = "rules";  // "rules" or "llm"
  std::string classifier_provider;   // provider for the llm classifier
  std::size_t k = kDefaultTopK;
  std::size_t delta = kDefaultDelta;
  std::size_t token_limit = kDefaultTokenLimit;
  std::size_t history_turns = kDefaultHistoryTurns;
  std::size_t embedding_dimension = kDefaultEmbeddingDimension;
  TrendOptions trend;
  std::filesystem::path state_dir;  // empty: nothing persisted
  std::filesystem::path templates_dir;
  std::filesystem::path providers_file;
  std::filesystem::path rules_file;  // empty: built-in cue table
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::string auth_token_env = "LEDGERLENS_API_TOKEN";

  // Relative paths resolve against base_dir.
  static ServiceConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static ServiceConfig load(const std::filesystem::path& path);
};

nlohmann::json to_json(const ServiceConfig& c);

struct Turn {
  std::string question;
  std::string corrected_question;
  Intent intent = Intent::BasicInfo;
  bool intent_fallback = false;
  NamedEntities entities;              // after inheritance
  std::vector<std::string> inherited;  // "metrics", "geos", "periods"
  std::vector<std::string> chunk_ids;
  int relaxation_stage = 0;
  std::string provider;
  std::string status = "ok";  // "ok" or "error"
  std::string error;
  std::string answer;
  std::optional<ResponseScores> scores;
  double gateway_seconds = 0.0;
  double pipeline_seconds = 0.0;  // excluding the gateway
  double estimated_cost = 0.0;
  std::string started_at;  // ISO-8601 UTC
  std::string finished_at;

  bool ok() const { return status == "ok"; }
};

void to_json(nlohmann::json& j, const Turn& t);
void from_json(const nlohmann::json& j, Turn& t);

struct ConversationThread {
  std::string id;
  std::vector<Turn> turns;

  // Chunk ids of the latest turn; empty for a new thread.
  std::vector<std::string> cached_selection() const;
};

nlohmann::json to_json(const ConversationThread& t);

struct AskResult {
  std::string thread_id;
  std::size_t turn_index = 0;
  Turn turn;
};

// The answer payload returned by POST /v1/ask and printed by the CLI.
nlohmann::json ask_payload(const AskResult& r);

struct IngestSummary {
  std::size_t records = 0;
  std::size_t primary = 0;
  std::size_t feature = 0;
  std::size_t trend = 0;
  std::size_t total() const { return primary + feature + trend; }
};

nlohmann::json to_json(const IngestSummary& s);

// Immutable snapshot: one lexicon plus the chunk store built with it.
struct KnowledgeBase {
  std::shared_ptr<const KeywordDictionary> lexicon;
  ChunkStore store;
  IngestSummary summary;
};

struct MetricsSummary {
  std::size_t answered = 0;  // scored turns
  std::size_t errors = 0;
  std::array<std::optional<double>, kMetricCount> averages{};
  std::array<std::size_t, 3> confidence_counts{};  // Low, Medium, High
};

nlohmann::json to_json(const MetricsSummary& m);

// Builds the chunk set for a table and lexicon.
ChunkSet forge_chunks(const std::vector<TableRecord>& records, const KeywordDictionary& lexicon,
                      const TrendOptions& trend = {});

class ConversationService {
 public:
  ConversationService(ServiceConfig config, ProviderRegistry providers, TemplateSet templates,
                      std::shared_ptr<const Embedder> embedder = nullptr);
  ~ConversationService();

  // Loads templates, providers and the rule table named by the config, then
  // restores persisted state.
  static std::unique_ptr<ConversationService> create(const ServiceConfig& config);

  // Offline pipeline, then an atomic swap. On any error the live store is
  // untouched.
  IngestSummary ingest(const std::filesystem::path& table_path, const std::filesystem::path& lexicon_path);
  IngestSummary install(std::vector<DataChunk> chunks, KeywordDictionary lexicon, std::size_t records = 0);

  // Throws EmptyStore, UnknownThread, GatewayError or Timeout. A gateway
  // failure is still recorded on the thread as an error turn.
  AskResult ask(const std::optional<std::string>& thread_id, const std::string& question);

  ConversationThread thread(const std::string& id) const;  // throws UnknownThread
  std::vector<std::string> thread_ids() const;
  MetricsSummary metrics() const;

  std::shared_ptr<const KnowledgeBase> knowledge_base() const;
  std::size_t store_size() const;
  const ServiceConfig& config() const noexcept { return config_; }
  const ProviderRegistry& providers() const noexcept { return providers_; }

  // Reads the store and threads back from the state directory.
  void restore();

 private:
  struct ThreadState {
    std::mutex mutex;
    ConversationThread data;
  };

  std::shared_ptr<ThreadState> find_thread(const std::string& id) const;
  std::shared_ptr<ThreadState> new_thread();
  void persist_thread(const ConversationThread& t) const;
  void persist_store(const KnowledgeBase& kb) const;
  std::unique_ptr<IntentClassifier> make_classifier() const;

  ServiceConfig config_;
  ProviderRegistry providers_;
  TemplateSet templates_;
  std::shared_ptr<const Embedder> embedder_;
  RuleClassifier rules_;
  std::unique_ptr<IntentClassifier> classifier_;

  mutable std::mutex kb_mutex_;
  std::shared_ptr<const KnowledgeBase> kb_;
  std::mutex ingest_mutex_;

  mutable std::shared_mutex threads_mutex_;
  std::map<std::string, std::shared_ptr<ThreadState>> threads_;
  std::atomic<std::uint64_t> next_thread_{1};
};

}  // namespace ledgerlens
